"""Benchmark allocators: exhaustive simplex-grid search (the optimality
reference), an orthogonal OFDMA comparator, and fixed-fraction NOMA.

The OFDMA comparator splits the band into K equal sub-bands.  Both the
B-VU interference and the noise scale with sub-band width, so the outage
floor of vehicle k becomes Y_k / K while X_k is unchanged and the NOMA
coupling Z_k disappears.  The QoS floor is kept as an absolute data rate
(r_min * full bandwidth), which each vehicle must reach on one K-th of
the band.
"""

import math
from dataclasses import dataclass

import numpy as np

from .outage import OutageCoefficients, transformed_sinr_all

_LN2 = math.log(2.0)


@dataclass
class GridSpec:
    resolution: int = 200

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("grid resolution must be at least 2")


@dataclass
class BaselineResult:
    feasible: bool
    alpha: np.ndarray | None
    ee: float
    sumrate_bps: float


def simplex_grid(k: int, resolution: int) -> np.ndarray:
    """All grid allocations with K-1 free fractions and the first absorbing
    the remainder; rows are (alpha_1 .. alpha_K), each summing to one."""
    if k < 1:
        raise ValueError("need at least one vehicle")
    if k == 1:
        return np.ones((1, 1))
    axes = [np.linspace(0.0, 1.0, resolution)] * (k - 1)
    mesh = np.meshgrid(*axes, indexing="ij")
    frees = np.stack([m.ravel() for m in mesh], axis=1)
    total = frees.sum(axis=1)
    keep = total <= 1.0 + 1e-12
    frees = frees[keep]
    first = 1.0 - frees.sum(axis=1)
    return np.column_stack([first, frees])


def _noma_ee_grid(alphas: np.ndarray, coeffs: OutageCoefficients, p_w: float,
                  p_c_w: float, p_out: float, bandwidth_hz: float):
    """(ee, sumrate, sinr matrix) for a batch of allocations."""
    k = coeffs.num_vehicles
    tails = np.zeros_like(alphas)
    if k > 1:
        tails[:, :-1] = np.cumsum(alphas[:, ::-1], axis=1)[:, ::-1][:, 1:]
    g = coeffs.x * p_w * alphas / (coeffs.y + coeffs.z * p_w * tails)
    rate = (1.0 - p_out) * bandwidth_hz * np.log2(1.0 + g).sum(axis=1)
    ee = rate / (p_w * alphas.sum(axis=1) + p_c_w)
    return ee, rate, g


def exhaustive_search(coeffs: OutageCoefficients, p_w: float, grid: GridSpec,
                      r_min: float, p_out: float, bandwidth_hz: float,
                      p_c_w: float) -> BaselineResult:
    """Best grid allocation under QoS, scored with the exact transformed rate."""
    k = coeffs.num_vehicles
    if k > 4:
        raise ValueError("exhaustive search is a desk-scale benchmark (K <= 4)")
    alphas = simplex_grid(k, grid.resolution)
    ee, rate, g = _noma_ee_grid(alphas, coeffs, p_w, p_c_w, p_out, bandwidth_hz)
    if r_min > 0:
        threshold = 2.0 ** r_min - 1.0
        ok = (g >= threshold).all(axis=1)
    else:
        ok = np.ones(len(alphas), dtype=bool)
    if not ok.any():
        return BaselineResult(feasible=False, alpha=None, ee=math.nan,
                              sumrate_bps=math.nan)
    scores = np.where(ok, ee, -np.inf)
    i = int(np.argmax(scores))
    return BaselineResult(feasible=True, alpha=alphas[i], ee=float(ee[i]),
                          sumrate_bps=float(rate[i]))


def ofdma_ee(fractions: np.ndarray, coeffs: OutageCoefficients, p_w: float,
             p_c_w: float, p_out: float, bandwidth_hz: float):
    """(ee, sumrate, per-vehicle SE on own sub-band) for one power split."""
    k = coeffs.num_vehicles
    fractions = np.asarray(fractions, dtype=float)
    g = coeffs.x * p_w * fractions / (coeffs.y / k)
    se = np.log2(1.0 + g)
    rate = (1.0 - p_out) * (bandwidth_hz / k) * float(se.sum())
    return rate / (p_w * float(fractions.sum()) + p_c_w), rate, se


def ofdma_baseline(coeffs: OutageCoefficients, p_w: float, r_min: float,
                   p_out: float, bandwidth_hz: float, p_c_w: float,
                   grid: GridSpec | None = None) -> BaselineResult:
    """Equal-bandwidth orthogonal sub-bands with a grid-optimized power split.

    QoS: each vehicle's sub-band rate must reach r_min * bandwidth bit/s,
    i.e. log2(1 + g_k) >= K * r_min on its own sub-band.
    """
    k = coeffs.num_vehicles
    grid = grid or GridSpec()
    fractions = simplex_grid(k, grid.resolution)
    g = coeffs.x * p_w * fractions / (coeffs.y / k)
    se = np.log2(1.0 + g)
    rate = (1.0 - p_out) * (bandwidth_hz / k) * se.sum(axis=1)
    ee = rate / (p_w * fractions.sum(axis=1) + p_c_w)
    if r_min > 0:
        ok = (se >= k * r_min).all(axis=1)
    else:
        ok = np.ones(len(fractions), dtype=bool)
    if not ok.any():
        return BaselineResult(feasible=False, alpha=None, ee=math.nan,
                              sumrate_bps=math.nan)
    scores = np.where(ok, ee, -np.inf)
    i = int(np.argmax(scores))
    return BaselineResult(feasible=True, alpha=fractions[i], ee=float(ee[i]),
                          sumrate_bps=float(rate[i]))


def ofdma_sumrate_derivative(p_w: float, fractions: np.ndarray,
                             coeffs: OutageCoefficients, p_out: float,
                             bandwidth_hz: float) -> float:
    """d(average OFDMA sum-rate)/dP for the generic quasi-concave search."""
    k = coeffs.num_vehicles
    fractions = np.asarray(fractions, dtype=float)
    xf = coeffs.x * fractions
    terms = xf / (xf * p_w + coeffs.y / k)
    return (1.0 - p_out) * (bandwidth_hz / k) * float(terms.sum()) / _LN2


def fixed_power_noma(fractions: np.ndarray, coeffs: OutageCoefficients,
                     p_w: float, p_out: float, bandwidth_hz: float,
                     p_c_w: float) -> BaselineResult:
    """Energy efficiency at a given split, no optimization."""
    fractions = np.asarray(fractions, dtype=float)
    if np.any(fractions < 0) or fractions.sum() > 1.0 + 1e-9:
        raise ValueError("fractions must lie on the simplex")
    g = transformed_sinr_all(coeffs, p_w, fractions)
    rate = (1.0 - p_out) * bandwidth_hz * float(np.log2(1.0 + g).sum())
    ee = rate / (p_w * float(fractions.sum()) + p_c_w) if fractions.sum() > 0 or p_c_w > 0 else 0.0
    return BaselineResult(feasible=True, alpha=fractions, ee=ee,
                          sumrate_bps=rate)
