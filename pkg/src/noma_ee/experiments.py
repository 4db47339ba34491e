"""Monte Carlo driver: single trials, axis sweeps, result emission.

A trial draws one scenario, computes the outage coefficients per RSU,
finds the RSU transmit power (gradient-assisted search), runs the
requested allocators and sums energy efficiency over RSUs (no inter-RSU
interference, so the system metric is additive).

Per-trial seeds are spawned from (root seed, axis index, trial index) so
every sweep point is independently randomized yet byte-reproducible, and
aggregation is a deterministic fold in (axis index, trial index) order:
serial and parallel runs emit identical CSV.
"""

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import alloc, baselines, gabs
from .channel import generate_scenario
from .config import ScenarioConfig
from .outage import compute_coefficients
from .units import dbm_to_watts

SOLVER_NAMES = ("gabs_dinkelbach", "gabs_exhaustive", "ofdma", "fixed")
AXIS_NAMES = ("rsu_power_dbm", "p_out", "sigma2_rsu", "sigma2_bs",
              "num_rsus", "dinkelbach_iteration")

CSV_COLUMNS = ("axis_name", "axis_value", "solver", "mean_ee_bits_per_joule",
               "std_ee", "mean_sumrate_bps", "std_sumrate", "trials",
               "failures", "mean_dinkelbach_iters")


@dataclass
class SweepSpec:
    axis: str
    values: list
    trials: int
    solvers: tuple = SOLVER_NAMES
    base_config: ScenarioConfig = field(default_factory=ScenarioConfig)
    seed: int | None = None
    grid_resolution: int = 200
    collect_traces: bool = False

    def __post_init__(self):
        if self.axis not in AXIS_NAMES:
            raise ValueError(f"unknown sweep axis '{self.axis}'; "
                             f"expected one of {AXIS_NAMES}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.values:
            raise ValueError("values must be non-empty")
        if list(self.values) != sorted(self.values):
            raise ValueError("axis values must be sorted ascending")
        unknown = set(self.solvers) - set(SOLVER_NAMES)
        if unknown:
            raise ValueError(f"unknown solvers: {sorted(unknown)}")


@dataclass
class SolverOutcome:
    ee: float
    sumrate_bps: float
    feasible: bool
    converged: bool
    failed: bool
    dinkelbach_iters: float
    p_star_dbm: float | None = None
    alpha: list | None = None
    q_trace: list | None = None
    ee_trace: list | None = None
    sumrate_trace: list | None = None


@dataclass
class SweepResult:
    spec_axis: str
    rows: list                      # dicts keyed by CSV_COLUMNS
    traces: list = field(default_factory=list)

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for row in self.rows:
            lines.append(",".join(_format_cell(row[c]) for c in CSV_COLUMNS))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {"axis": self.spec_axis, "rows": self.rows}
        if self.traces:
            payload["traces"] = self.traces
        return json.dumps(payload, indent=1, sort_keys=True)


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.10g}"
    return str(value)


def derive_seed(root_seed: int, axis_index: int, trial_index: int):
    """Independent, reproducible per-(axis point, trial) seed material."""
    return (root_seed, axis_index, trial_index)


def _nanmean(values):
    return float(np.mean(values)) if values else math.nan


def run_trial(config: ScenarioConfig, solvers, seed,
              fixed_power_dbm: float | None = None,
              grid_resolution: int = 200,
              collect_trace: bool = False,
              scenario=None) -> dict:
    """One scenario, all requested solvers; returns {solver: SolverOutcome}."""
    if scenario is None:
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        scenario = generate_scenario(config, rng)
    p_c_w = dbm_to_watts(config.circuit_power_dbm)
    bw = config.bandwidth_hz
    p_out = config.p_out
    gabs_cfg = gabs.GabsConfig(
        p_low_w=dbm_to_watts(config.rsu_power_low_dbm),
        p_high_w=dbm_to_watts(config.rsu_power_high_dbm),
    )
    grid = baselines.GridSpec(resolution=grid_resolution)
    fixed_p_w = (dbm_to_watts(fixed_power_dbm)
                 if fixed_power_dbm is not None else None)

    acc = {name: SolverOutcome(ee=0.0, sumrate_bps=0.0, feasible=True,
                               converged=True, failed=False,
                               dinkelbach_iters=0.0)
           for name in solvers}
    dink_iter_counts = []
    q_traces = []
    ee_traces = []
    rate_traces = []

    for links in scenario.rsus:
        coeffs = compute_coefficients(links, config)
        k = coeffs.num_vehicles
        init = gabs.default_fractions(k)

        noma_gabs = None
        if any(s in solvers for s in ("gabs_dinkelbach", "gabs_exhaustive", "fixed")):
            if fixed_p_w is not None:
                p_noma = fixed_p_w
                ee_init = gabs.ee_of_power(p_noma, init, coeffs, p_c_w, p_out, bw)
            else:
                noma_gabs = gabs.gabs_optimize(coeffs, init, gabs_cfg, p_c_w,
                                               p_out, bw)
                p_noma = noma_gabs.p_star_w
                ee_init = noma_gabs.ee_star

        if "gabs_dinkelbach" in solvers:
            out = acc["gabs_dinkelbach"]
            result = alloc.dinkelbach_solve(coeffs, p_noma, config,
                                            q_init=ee_init)
            out.ee += result.achieved_ee
            out.sumrate_bps += result.achieved_ee * (
                p_noma * float(result.alpha.sum()) + p_c_w)
            out.feasible &= result.feasible or not result.qos_enforced
            out.converged &= result.converged
            if noma_gabs is not None:
                out.converged &= noma_gabs.converged
            dink_iter_counts.append(result.dinkelbach_iterations)
            if collect_trace:
                q_traces.append([r["q"] for r in result.trace])
                ee_traces.append([r["exact_ee"] for r in result.trace])
                rate_traces.append([r["sumrate_bps"] for r in result.trace])

        if "gabs_exhaustive" in solvers:
            out = acc["gabs_exhaustive"]
            res = baselines.exhaustive_search(coeffs, p_noma, grid,
                                              config.r_min_bps_per_hz,
                                              p_out, bw, p_c_w)
            if not res.feasible:
                out.failed = True
            else:
                out.ee += res.ee
                out.sumrate_bps += res.sumrate_bps

        if "ofdma" in solvers:
            out = acc["ofdma"]
            eq = np.full(k, 1.0 / k)
            if fixed_p_w is not None:
                p_ofdma = fixed_p_w
            else:
                ofdma_search = gabs.gabs_search(
                    lambda p: _ofdma_ee_derivative(p, eq, coeffs, p_c_w,
                                                   p_out, bw),
                    lambda p: baselines.ofdma_ee(eq, coeffs, p, p_c_w,
                                                 p_out, bw)[0],
                    gabs_cfg)
                p_ofdma = ofdma_search.p_star_w
            res = baselines.ofdma_baseline(coeffs, p_ofdma,
                                           config.r_min_bps_per_hz,
                                           p_out, bw, p_c_w, grid)
            if not res.feasible:
                out.failed = True
            else:
                out.ee += res.ee
                out.sumrate_bps += res.sumrate_bps

        if "fixed" in solvers:
            out = acc["fixed"]
            res = baselines.fixed_power_noma(init, coeffs, p_noma, p_out,
                                             bw, p_c_w)
            out.ee += res.ee
            out.sumrate_bps += res.sumrate_bps

    if "gabs_dinkelbach" in acc and dink_iter_counts:
        out = acc["gabs_dinkelbach"]
        out.dinkelbach_iters = float(np.mean(dink_iter_counts))
        out.failed = not out.converged
        if collect_trace:
            out.q_trace = q_traces
            out.ee_trace = ee_traces
            out.sumrate_trace = rate_traces
    return acc


def _ofdma_ee_derivative(p_w, fractions, coeffs, p_c_w, p_out, bw):
    s = float(np.sum(fractions))
    consumed = p_w * s + p_c_w
    _, rate, _ = baselines.ofdma_ee(fractions, coeffs, p_w, p_c_w, p_out, bw)
    d_rate = baselines.ofdma_sumrate_derivative(p_w, fractions, coeffs,
                                                p_out, bw)
    return (d_rate * consumed - rate * s) / consumed ** 2


def _axis_config(spec: SweepSpec, value):
    """Config override plus any fixed-power directive for one axis value."""
    cfg = spec.base_config
    if spec.axis == "rsu_power_dbm":
        return cfg, float(value)
    if spec.axis == "dinkelbach_iteration":
        return cfg, None
    if spec.axis == "num_rsus":
        return cfg.with_overrides(num_rsus=int(value)), None
    return cfg.with_overrides(**{spec.axis: float(value)}), None


def _trial_task(args):
    (axis_index, trial_index, cfg, solvers, seed, fixed_p, grid_resolution,
     collect_trace) = args
    outcome = run_trial(cfg, solvers, seed, fixed_power_dbm=fixed_p,
                        grid_resolution=grid_resolution,
                        collect_trace=collect_trace)
    return axis_index, trial_index, outcome


def _worker_count(n_tasks: int) -> int:
    cap = os.environ.get("NOMA_EE_THREADS")
    workers = os.cpu_count() or 1
    if cap:
        workers = min(workers, max(1, int(cap)))
    return max(1, min(workers, n_tasks))


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Run trials per axis value with derived seeds and aggregate."""
    root_seed = spec.seed if spec.seed is not None else spec.base_config.rng_seed

    if spec.axis == "dinkelbach_iteration":
        return _run_convergence_sweep(spec, root_seed)

    tasks = []
    for ai, value in enumerate(spec.values):
        cfg, fixed_p = _axis_config(spec, value)
        for ti in range(spec.trials):
            tasks.append((ai, ti, cfg, tuple(spec.solvers),
                          derive_seed(root_seed, ai, ti), fixed_p,
                          spec.grid_resolution, spec.collect_traces))

    workers = _worker_count(len(tasks))
    results = {}
    if workers == 1:
        for task in tasks:
            ai, ti, outcome = _trial_task(task)
            results[(ai, ti)] = outcome
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for ai, ti, outcome in pool.map(_trial_task, tasks,
                                            chunksize=max(1, len(tasks) // (workers * 8))):
                results[(ai, ti)] = outcome

    rows = []
    traces = []
    for ai, value in enumerate(spec.values):
        per_solver = {name: [] for name in spec.solvers}
        for ti in range(spec.trials):
            outcome = results[(ai, ti)]
            for name in spec.solvers:
                per_solver[name].append(outcome[name])
            if spec.collect_traces:
                traces.append({
                    "axis_value": value,
                    "trial": ti,
                    "traces": {name: asdict(outcome[name])
                               for name in spec.solvers},
                })
        for name in spec.solvers:
            outs = per_solver[name]
            good = [o for o in outs if not o.failed]
            ees = [o.ee for o in good]
            rates = [o.sumrate_bps for o in good]
            iters = [o.dinkelbach_iters for o in good]
            rows.append({
                "axis_name": spec.axis,
                "axis_value": value,
                "solver": name,
                "mean_ee_bits_per_joule": _nanmean(ees),
                "std_ee": float(np.std(ees)) if ees else math.nan,
                "mean_sumrate_bps": _nanmean(rates),
                "std_sumrate": float(np.std(rates)) if rates else math.nan,
                "trials": len(good),
                "failures": len(outs) - len(good),
                "mean_dinkelbach_iters": _nanmean(iters) if name == "gabs_dinkelbach" else 0.0,
            })
    return SweepResult(spec_axis=spec.axis, rows=rows, traces=traces)


def _run_convergence_sweep(spec: SweepSpec, root_seed: int) -> SweepResult:
    """Mean Dinkelbach parameter per outer iteration (values are iteration
    indices, 1-based); converged trials hold their final value."""
    values = [int(v) for v in spec.values]
    tasks = [(0, ti, spec.base_config, ("gabs_dinkelbach",),
              derive_seed(root_seed, 0, ti), None, spec.grid_resolution, True)
             for ti in range(spec.trials)]
    workers = _worker_count(len(tasks))
    results = {}
    if workers == 1:
        for task in tasks:
            _, ti, outcome = _trial_task(task)
            results[ti] = outcome["gabs_dinkelbach"]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for _, ti, outcome in pool.map(_trial_task, tasks):
                results[ti] = outcome["gabs_dinkelbach"]

    rows = []
    traces = []
    for value in values:
        ees, rates, iters = [], [], []
        for ti in range(spec.trials):
            out = results[ti]
            if out.failed or not out.ee_trace:
                continue
            # system-level: sum per-RSU trace values at this iteration
            ee_i = sum(tr[min(value, len(tr)) - 1] for tr in out.ee_trace)
            rate_i = sum(tr[min(value, len(tr)) - 1] for tr in out.sumrate_trace)
            ees.append(ee_i)
            rates.append(rate_i)
            iters.append(out.dinkelbach_iters)
        rows.append({
            "axis_name": spec.axis,
            "axis_value": value,
            "solver": "gabs_dinkelbach",
            "mean_ee_bits_per_joule": _nanmean(ees),
            "std_ee": float(np.std(ees)) if ees else math.nan,
            "mean_sumrate_bps": _nanmean(rates),
            "std_sumrate": float(np.std(rates)) if rates else math.nan,
            "trials": len(ees),
            "failures": spec.trials - len(ees),
            "mean_dinkelbach_iters": _nanmean(iters),
        })
    if spec.collect_traces:
        for ti in range(spec.trials):
            out = results[ti]
            traces.append({"axis_value": None, "trial": ti,
                           "traces": {"gabs_dinkelbach": asdict(out)}})
    return SweepResult(spec_axis=spec.axis, rows=rows, traces=traces)


def emit_results(result: SweepResult, out_dir: str | Path,
                 stem: str = "sweep") -> tuple[Path, Path]:
    """Write `<stem>.csv` and `<stem>.json`; returns the two paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    json_path = out / f"{stem}.json"
    csv_path.write_text(result.to_csv())
    json_path.write_text(result.to_json())
    return csv_path, json_path
