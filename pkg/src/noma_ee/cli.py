"""Command-line front end.

Subcommands: ``solve`` (one instance, prints P*, EE and the allocation),
``sweep`` (Monte Carlo axis sweep to CSV/JSON), ``validate-outage``
(empirical outage check of a solved instance), ``bench`` (wall-time of the
iterative solver vs exhaustive search).  Exit codes: 0 success, 1 usage or
config error, 2 solver failure.
"""

import argparse
import sys
import time

import numpy as np

from . import alloc, baselines, gabs
from .channel import generate_scenario
from .config import ScenarioConfig, apply_override, dump_config, load_config
from .experiments import SOLVER_NAMES, SweepSpec, emit_results, run_sweep, run_trial
from .outage import Allocation, compute_coefficients, monte_carlo_outage
from .units import dbm_to_watts, watts_to_dbm

USAGE_ERROR = 1
SOLVER_FAILURE = 2


def _add_common(parser):
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override one config field")
    parser.add_argument("--seed", type=int, help="root RNG seed")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--trace", action="store_true",
                        help="write per-trial solver traces")
    parser.add_argument("--dump-config", action="store_true",
                        help="print the effective config and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noma-ee",
        description="Energy-efficient NOMA power allocation: solver and "
                    "Monte Carlo experiments.")
    sub = parser.add_subparsers(dest="command")

    solve = sub.add_parser("solve", help="solve one scenario instance")
    _add_common(solve)

    sweep = sub.add_parser("sweep", help="run a Monte Carlo sweep")
    _add_common(sweep)
    sweep.add_argument("--axis", required=True,
                       help="sweep axis (e.g. p_out, num_rsus, rsu_power_dbm)")
    sweep.add_argument("--values", required=True,
                       help="comma-separated axis values")
    sweep.add_argument("--trials", type=int, default=500)
    sweep.add_argument("--solvers", default=",".join(SOLVER_NAMES),
                       help="comma-separated solver subset")

    validate = sub.add_parser("validate-outage",
                              help="empirical outage probability check")
    _add_common(validate)
    validate.add_argument("--draws", type=int, default=10_000)

    bench = sub.add_parser("bench",
                           help="time GABS-Dinkelbach against exhaustive search")
    _add_common(bench)
    bench.add_argument("--instances", type=int, default=20)
    return parser


def _load_effective_config(args) -> ScenarioConfig:
    cfg = ScenarioConfig()
    if args.config:
        cfg = load_config(args.config, base=cfg)
    for assignment in args.overrides:
        cfg = apply_override(cfg, assignment)
    if args.seed is not None:
        cfg = cfg.with_overrides(rng_seed=args.seed)
    return cfg


def _cmd_solve(args, cfg: ScenarioConfig) -> int:
    outcome = run_trial(cfg, ("gabs_dinkelbach",), cfg.rng_seed,
                        collect_trace=args.trace)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.rng_seed))
    scenario = generate_scenario(cfg, rng)
    p_c_w = dbm_to_watts(cfg.circuit_power_dbm)
    gabs_cfg = gabs.GabsConfig(p_low_w=dbm_to_watts(cfg.rsu_power_low_dbm),
                               p_high_w=dbm_to_watts(cfg.rsu_power_high_dbm))
    failed = False
    for i, links in enumerate(scenario.rsus):
        coeffs = compute_coefficients(links, cfg)
        init = gabs.default_fractions(coeffs.num_vehicles)
        search = gabs.gabs_optimize(coeffs, init, gabs_cfg, p_c_w, cfg.p_out,
                                    cfg.bandwidth_hz)
        result = alloc.dinkelbach_solve(coeffs, search.p_star_w, cfg,
                                        q_init=search.ee_star)
        failed |= not (search.converged and result.converged)
        alpha_text = ", ".join(f"{a:.6f}" for a in result.alpha)
        print(f"RSU {i}: P* = {watts_to_dbm(search.p_star_w):.3f} dBm, "
              f"EE = {result.achieved_ee:.6g} bit/J, "
              f"alpha = [{alpha_text}], "
              f"qos_feasible = {result.feasible}, "
              f"dinkelbach_iterations = {result.dinkelbach_iterations}")
    total = outcome["gabs_dinkelbach"]
    print(f"system EE = {total.ee:.6g} bit/J, "
          f"system sum-rate = {total.sumrate_bps:.6g} bit/s")
    return SOLVER_FAILURE if failed else 0


def _cmd_sweep(args, cfg: ScenarioConfig) -> int:
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
        solvers = tuple(s.strip() for s in args.solvers.split(",") if s.strip())
        spec = SweepSpec(axis=args.axis, values=values, trials=args.trials,
                         solvers=solvers, base_config=cfg, seed=cfg.rng_seed,
                         collect_traces=args.trace)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    result = run_sweep(spec)
    csv_path, json_path = emit_results(result, args.out,
                                       stem=f"sweep_{args.axis}")
    print(f"wrote {csv_path} and {json_path}")
    return 0


def _cmd_validate_outage(args, cfg: ScenarioConfig) -> int:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.rng_seed))
    scenario = generate_scenario(cfg, rng)
    p_c_w = dbm_to_watts(cfg.circuit_power_dbm)
    gabs_cfg = gabs.GabsConfig(p_low_w=dbm_to_watts(cfg.rsu_power_low_dbm),
                               p_high_w=dbm_to_watts(cfg.rsu_power_high_dbm))
    allocations = []
    for links in scenario.rsus:
        coeffs = compute_coefficients(links, cfg)
        init = gabs.default_fractions(coeffs.num_vehicles)
        search = gabs.gabs_optimize(coeffs, init, gabs_cfg, p_c_w, cfg.p_out,
                                    cfg.bandwidth_hz)
        result = alloc.dinkelbach_solve(coeffs, search.p_star_w, cfg,
                                        q_init=search.ee_star)
        allocations.append(Allocation(p_w=search.p_star_w, alpha=result.alpha))
    fractions = monte_carlo_outage(allocations, scenario, args.draws, rng)
    slack = 3.0 * (cfg.p_out * (1.0 - cfg.p_out) / args.draws) ** 0.5
    bound = cfg.p_out + slack
    ok = True
    for i, frac in enumerate(fractions):
        for k, f in enumerate(frac):
            status = "ok" if f <= bound else "VIOLATION"
            ok &= f <= bound
            print(f"RSU {i} vehicle {k}: empirical outage = {f:.5f} "
                  f"(target {cfg.p_out}, bound {bound:.5f}) {status}")
    return 0 if ok else SOLVER_FAILURE


def _cmd_bench(args, cfg: ScenarioConfig) -> int:
    p_c_w = dbm_to_watts(cfg.circuit_power_dbm)
    gabs_cfg = gabs.GabsConfig(p_low_w=dbm_to_watts(cfg.rsu_power_low_dbm),
                               p_high_w=dbm_to_watts(cfg.rsu_power_high_dbm))
    grid = baselines.GridSpec()
    t_fast = t_grid = 0.0
    ratios = []
    for i in range(args.instances):
        rng = np.random.default_rng(np.random.SeedSequence((cfg.rng_seed, i)))
        scenario = generate_scenario(cfg, rng)
        for links in scenario.rsus:
            coeffs = compute_coefficients(links, cfg)
            init = gabs.default_fractions(coeffs.num_vehicles)
            t0 = time.perf_counter()
            search = gabs.gabs_optimize(coeffs, init, gabs_cfg, p_c_w,
                                        cfg.p_out, cfg.bandwidth_hz)
            result = alloc.dinkelbach_solve(coeffs, search.p_star_w, cfg,
                                            q_init=search.ee_star)
            t_fast += time.perf_counter() - t0
            t0 = time.perf_counter()
            res = baselines.exhaustive_search(
                coeffs, search.p_star_w, grid,
                0.0 if not result.qos_enforced else cfg.r_min_bps_per_hz,
                cfg.p_out, cfg.bandwidth_hz, p_c_w)
            t_grid += time.perf_counter() - t0
            if res.feasible and res.ee > 0:
                ratios.append(result.achieved_ee / res.ee)
    n = args.instances
    print(f"instances: {n}")
    print(f"GABS-Dinkelbach: {1e3 * t_fast / n:.2f} ms/instance")
    print(f"GABS-Exhaustive: {1e3 * t_grid / n:.2f} ms/instance")
    if ratios:
        print(f"EE ratio (iterative / exhaustive): min {min(ratios):.4f}, "
              f"median {float(np.median(ratios)):.4f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return USAGE_ERROR
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return USAGE_ERROR
    try:
        cfg = _load_effective_config(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    if args.dump_config:
        print(dump_config(cfg), end="")
        return 0
    try:
        if args.command == "solve":
            return _cmd_solve(args, cfg)
        if args.command == "sweep":
            return _cmd_sweep(args, cfg)
        if args.command == "validate-outage":
            return _cmd_validate_outage(args, cfg)
        if args.command == "bench":
            return _cmd_bench(args, cfg)
    except Exception as exc:  # solver-side failures map to exit 2
        print(f"solver error: {exc}", file=sys.stderr)
        return SOLVER_FAILURE
    parser.print_usage(sys.stderr)
    return USAGE_ERROR


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
