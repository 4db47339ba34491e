"""Scenario generation: vehicle drops, large-scale gains and Rayleigh
fading with MMSE estimates.

Each RSU serves K vehicles picked from a 1-D Poisson drop along its road
segment.  Per link we keep the true fading coefficient, its MMSE estimate
and the large-scale gain (path loss x log-normal shadowing); the composite
gain of the RSU->vehicle information link is ``D^2 |h|^2`` and of the
BS->vehicle interference link ``D'^2 |g|^2``.  Vehicles are stored in
ascending order of the true-gain SINR metric

    |H_k|^2 / (|G_k|^2 * P_b_total + noise)

so index 0 is the weakest vehicle (decoded first under SIC, gets no
interference cancellation) and index K-1 the strongest.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import PathlossModel, ScenarioConfig
from .units import dbm_to_watts


def pathloss_linear(distance_m: float, model: PathlossModel | str,
                    exponent: float = 3.76) -> float:
    """Linear power gain of a link at the given distance.

    ``table1``: 10^(-(128.1 + 37.6 log10(d_km)) / 10); ``generic_exponent``:
    d_m^-exponent.
    """
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    model = PathlossModel(model)
    if model is PathlossModel.TABLE1:
        loss_db = 128.1 + 37.6 * math.log10(distance_m / 1000.0)
        return 10.0 ** (-loss_db / 10.0)
    return distance_m ** (-exponent)


@dataclass
class LinkState:
    """Channel state of one vehicle: geometry, shadowing, fading and estimates."""

    dist_rsu_m: float
    dist_bs_m: float
    shadow_rsu: float           # linear factor
    shadow_bs: float
    large_scale_rsu: float      # D^2, linear power gain incl. shadowing
    large_scale_bs: float       # D'^2
    h_true: complex
    g_true: complex
    h_est: complex
    g_est: complex

    @property
    def gain_rsu_true(self) -> float:
        """|H|^2 = D^2 |h|^2 with the true fading coefficient."""
        return self.large_scale_rsu * abs(self.h_true) ** 2

    @property
    def gain_bs_true(self) -> float:
        """|G|^2 = D'^2 |g|^2 with the true fading coefficient."""
        return self.large_scale_bs * abs(self.g_true) ** 2

    @property
    def est_mag_sq_rsu(self) -> float:
        return abs(self.h_est) ** 2

    @property
    def est_mag_sq_bs(self) -> float:
        return abs(self.g_est) ** 2


@dataclass
class Scenario:
    config: ScenarioConfig
    rsus: list[list[LinkState]]          # per RSU, vehicles in SIC order
    rsu_positions: list[float] = field(default_factory=list)

    @property
    def num_rsus(self) -> int:
        return len(self.rsus)


def order_vehicles(links: list[LinkState], bs_power_total_w: float,
                   noise_w: float) -> list[int]:
    """Permutation sorting vehicles ascending by the true-gain SINR metric.

    Ties keep the original relative order (stable sort).
    """
    if not links:
        raise ValueError("need at least one link")
    metric = [l.gain_rsu_true / (l.gain_bs_true * bs_power_total_w + noise_w)
              for l in links]
    return sorted(range(len(links)), key=metric.__getitem__)


def _complex_normal(rng: np.random.Generator, variance: float, n: int) -> np.ndarray:
    if variance == 0.0:
        return np.zeros(n, dtype=complex)
    scale = math.sqrt(variance / 2.0)
    return rng.normal(0.0, scale, n) + 1j * rng.normal(0.0, scale, n)


def _drop_positions(rng: np.random.Generator, radius_m: float,
                    mean_spacing_m: float, k_min: int) -> np.ndarray:
    """1-D Poisson drop on [-radius, radius]; redraws until >= k_min vehicles."""
    while True:
        positions = []
        x = -radius_m + rng.exponential(mean_spacing_m)
        while x <= radius_m:
            positions.append(x)
            x += rng.exponential(mean_spacing_m)
        if len(positions) >= k_min:
            return np.asarray(positions)


def generate_scenario(config: ScenarioConfig,
                      rng: np.random.Generator | None = None) -> Scenario:
    """Draw a full multi-RSU scenario; same (config, seed) gives identical output.

    Mean inter-vehicle spacing is 2.5 s x speed (the usual vehicle-density
    convention at drop time), K of the dropped vehicles are kept uniformly
    at random, and BS distances are uniform in
    [min_bs_vehicle_dist_m, bs_radius_m].
    """
    config.validate()
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    speed_mps = config.vehicle_speed_kmh / 3.6
    mean_spacing = 2.5 * speed_mps
    k = config.vehicles_per_rsu
    noise_w = dbm_to_watts(config.noise_power_dbm)
    bs_power_w = dbm_to_watts(config.bs_tx_power_dbm)
    shadow_scale = config.shadowing_std_db

    rsus = []
    rsu_positions = []
    for i in range(config.num_rsus):
        rsu_positions.append(float(i))  # index placeholder; RSUs do not interact
        drop = _drop_positions(rng, config.rsu_radius_m, mean_spacing, k)
        chosen = rng.choice(len(drop), size=k, replace=False)
        d_rsu = np.abs(drop[chosen])
        d_bs = rng.uniform(config.min_bs_vehicle_dist_m, config.bs_radius_m, k)
        shadow_rsu = 10.0 ** (rng.normal(0.0, shadow_scale, k) / 10.0)
        shadow_bs = 10.0 ** (rng.normal(0.0, shadow_scale, k) / 10.0)
        h_est = _complex_normal(rng, 1.0 - config.sigma2_rsu, k)
        h_err = _complex_normal(rng, config.sigma2_rsu, k)
        g_est = _complex_normal(rng, 1.0 - config.sigma2_bs, k)
        g_err = _complex_normal(rng, config.sigma2_bs, k)

        links = []
        for j in range(k):
            d2 = pathloss_linear(float(d_rsu[j]), config.pathloss_model,
                                 config.pathloss_exponent) * float(shadow_rsu[j])
            dp2 = pathloss_linear(float(d_bs[j]), config.pathloss_model,
                                  config.pathloss_exponent) * float(shadow_bs[j])
            links.append(LinkState(
                dist_rsu_m=float(d_rsu[j]),
                dist_bs_m=float(d_bs[j]),
                shadow_rsu=float(shadow_rsu[j]),
                shadow_bs=float(shadow_bs[j]),
                large_scale_rsu=d2,
                large_scale_bs=dp2,
                h_true=complex(h_est[j] + h_err[j]),
                g_true=complex(g_est[j] + g_err[j]),
                h_est=complex(h_est[j]),
                g_est=complex(g_est[j]),
            ))
        perm = order_vehicles(links, bs_power_w, noise_w)
        rsus.append([links[p] for p in perm])
    return Scenario(config=config, rsus=rsus, rsu_positions=rsu_positions)


def _link_to_dict(link: LinkState) -> dict:
    d = {}
    for name in ("dist_rsu_m", "dist_bs_m", "shadow_rsu", "shadow_bs",
                 "large_scale_rsu", "large_scale_bs"):
        d[name] = getattr(link, name)
    for name in ("h_true", "g_true", "h_est", "g_est"):
        z = getattr(link, name)
        d[name] = [z.real, z.imag]
    return d


def _link_from_dict(d: dict) -> LinkState:
    kwargs = {k: d[k] for k in ("dist_rsu_m", "dist_bs_m", "shadow_rsu",
                                "shadow_bs", "large_scale_rsu", "large_scale_bs")}
    for name in ("h_true", "g_true", "h_est", "g_est"):
        re, im = d[name]
        kwargs[name] = complex(re, im)
    return LinkState(**kwargs)


def scenario_to_dict(scenario: Scenario) -> dict:
    cfg = dict(scenario.config.__dict__)
    cfg["pathloss_model"] = scenario.config.pathloss_model.value
    return {
        "config": cfg,
        "rsu_positions": list(scenario.rsu_positions),
        "rsus": [[_link_to_dict(l) for l in links] for links in scenario.rsus],
    }


def scenario_from_dict(d: dict) -> Scenario:
    cfg = ScenarioConfig(**d["config"])
    rsus = [[_link_from_dict(ld) for ld in links] for links in d["rsus"]]
    return Scenario(config=cfg, rsus=rsus, rsu_positions=list(d["rsu_positions"]))


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=1))


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))
