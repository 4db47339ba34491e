"""Outage-constrained rate model under imperfect CSI.

The probabilistic outage requirement is replaced by a deterministic one in
two steps: the signal term is pinned at the p/2 quantile of the conditional
|h|^2 distribution (a scaled noncentral chi-square with 2 degrees of
freedom), and the interference term is bounded through the Markov
inequality at its conditional mean.  Folding both into the SINR gives the
transformed per-vehicle SINR

    gamma*_k = X_k P alpha_k / (Y_k + Z_k P sum_{m>k} alpha_m)

with

    X_k = p_out * Finv_{|h|^2}(p_out / 2) * D_k^2
    Y_k = 2 * D'_k^2 * (|g_est|^2 + sigma2_bs) * P_b_total + p_out * noise
    Z_k = 2 * D_k^2  * (|h_est|^2 + sigma2_rsu)

All quantities are linear (watts, Hz).  ``monte_carlo_outage`` checks the
construction empirically: with the estimates held fixed and the true
fading redrawn, the fraction of draws where the scheduled rate exceeds
the achievable one must stay at or below p_out.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ive

from .channel import LinkState, Scenario
from .config import ScenarioConfig
from .units import dbm_to_watts

_CHUNK = 64
_MAX_TERMS = 400_000


@dataclass
class Allocation:
    """One RSU's decision: transmit power (W) and power-allocation factors."""

    p_w: float
    alpha: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)


def marcum_q1(a: float, b: float) -> float:
    """First-order Marcum Q function Q_1(a, b) = Pr[sqrt(X) > b], X ~ ncx2(2, a^2).

    Series over scaled Bessel terms; the two branches avoid summing a
    near-unity total (no cancellation, monotone partial sums).
    """
    if a < 0 or b < 0:
        raise ValueError("marcum_q1 arguments must be non-negative")
    if b == 0.0:
        return 1.0
    if a == 0.0:
        return math.exp(-b * b / 2.0)
    envelope = math.exp(-0.5 * (a - b) ** 2)
    if envelope == 0.0:
        return 1.0 if a > b else 0.0
    ab = a * b
    if b >= a:
        ratio, k0 = a / b, 0
    else:
        ratio, k0 = b / a, 1
    log_ratio = math.log(ratio)
    acc = 0.0
    k = k0
    while k < _MAX_TERMS:
        ks = np.arange(k, k + _CHUNK)
        terms = np.exp(ks * log_ratio) * ive(ks, ab)
        acc += float(terms.sum())
        if terms[-1] < 1e-18 * max(acc, 1e-300):
            break
        k += _CHUNK
    tail = envelope * acc
    if b >= a:
        return min(1.0, tail)
    return min(1.0, max(0.0, 1.0 - tail))


def sq_magnitude_cdf(t: float, est_mag_sq: float, variance: float) -> float:
    """CDF of |h|^2 at t for h ~ CN(h_est, variance), conditioned on the estimate.

    |h|^2 * 2/variance is noncentral chi-square with 2 degrees of freedom
    and noncentrality 2 |h_est|^2 / variance.
    """
    if variance < 0 or est_mag_sq < 0:
        raise ValueError("variance and est_mag_sq must be non-negative")
    if variance == 0.0:
        return 0.0 if t < est_mag_sq else 1.0
    if t <= 0.0:
        return 0.0
    a = math.sqrt(2.0 * est_mag_sq / variance)
    b = math.sqrt(2.0 * t / variance)
    return 1.0 - marcum_q1(a, b)


def noncentral_chi2_sq_magnitude_quantile(p: float, est_mag_sq: float,
                                          variance: float) -> float:
    """Inverse CDF of |h|^2 for h ~ CN(h_est, variance).

    Bisection on the Marcum-Q based CDF to absolute tolerance 1e-10 in
    probability (at most 200 halvings).  variance = 0 degenerates to the
    point mass at |h_est|^2.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if variance < 0 or est_mag_sq < 0:
        raise ValueError("variance and est_mag_sq must be non-negative")
    if variance == 0.0:
        return est_mag_sq
    lo = 0.0
    hi = est_mag_sq + variance
    while sq_magnitude_cdf(hi, est_mag_sq, variance) < p:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = sq_magnitude_cdf(mid, est_mag_sq, variance)
        if abs(f - p) <= 1e-10:
            return mid
        if f < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class OutageCoefficients:
    """Transformed-SINR coefficients of one RSU's vehicle group (SIC order)."""

    x: np.ndarray   # signal coefficients, linear gain
    y: np.ndarray   # interference-plus-noise floor, watts
    z: np.ndarray   # NOMA interference coupling, linear gain

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.z = np.asarray(self.z, dtype=float)

    @property
    def num_vehicles(self) -> int:
        return len(self.x)


def compute_xyz(link: LinkState, config: ScenarioConfig) -> tuple[float, float, float]:
    """(X, Y, Z) of a single vehicle from its link state."""
    bs_power_w = dbm_to_watts(config.bs_tx_power_dbm)
    noise_w = dbm_to_watts(config.noise_power_dbm)
    quant = noncentral_chi2_sq_magnitude_quantile(
        config.p_out / 2.0, link.est_mag_sq_rsu, config.sigma2_rsu)
    x = config.p_out * quant * link.large_scale_rsu
    y = (2.0 * link.large_scale_bs * (link.est_mag_sq_bs + config.sigma2_bs)
         * bs_power_w + config.p_out * noise_w)
    z = 2.0 * link.large_scale_rsu * (link.est_mag_sq_rsu + config.sigma2_rsu)
    return x, y, z


def compute_coefficients(links: list[LinkState],
                         config: ScenarioConfig) -> OutageCoefficients:
    """Coefficients for a whole RSU group, preserving the SIC order."""
    xyz = [compute_xyz(link, config) for link in links]
    x, y, z = (np.array(col) for col in zip(*xyz))
    return OutageCoefficients(x=x, y=y, z=z)


def transformed_sinr(coeffs: OutageCoefficients, k: int, p_w: float,
                     alpha: np.ndarray) -> float:
    """gamma*_k at transmit power p_w and allocation alpha (empty tail for k = K-1)."""
    alpha = np.asarray(alpha, dtype=float)
    tail = float(alpha[k + 1:].sum())
    return coeffs.x[k] * p_w * float(alpha[k]) / (coeffs.y[k] + coeffs.z[k] * p_w * tail)


def transformed_sinr_all(coeffs: OutageCoefficients, p_w: float,
                         alpha: np.ndarray) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    tails = np.concatenate([np.cumsum(alpha[::-1])[::-1][1:], [0.0]])
    return coeffs.x * p_w * alpha / (coeffs.y + coeffs.z * p_w * tails)


def scheduled_rate(sinr: float, bandwidth_hz: float) -> float:
    """Rate the RSU schedules against the transformed SINR, bit/s."""
    if sinr < 0:
        raise ValueError(f"SINR must be non-negative, got {sinr}")
    return bandwidth_hz * math.log2(1.0 + sinr)


def achievable_rate(sinr: float, bandwidth_hz: float) -> float:
    """Rate the true channel can carry (same Shannon form, true-gain SINR)."""
    return scheduled_rate(sinr, bandwidth_hz)


def rsu_average_sumrate(rates: np.ndarray, p_out: float) -> float:
    """(1 - p_out) * sum of the per-vehicle scheduled rates."""
    return (1.0 - p_out) * float(np.sum(rates))


@dataclass
class RateReport:
    """Per-vehicle scheduled rates plus the RSU average sum-rate."""

    transformed_sinr: np.ndarray
    scheduled_rate_bps: np.ndarray
    average_sumrate_bps: float

    def to_dict(self) -> dict:
        return {
            "transformed_sinr": list(map(float, self.transformed_sinr)),
            "scheduled_rate_bps": list(map(float, self.scheduled_rate_bps)),
            "average_sumrate_bps": float(self.average_sumrate_bps),
        }


def build_rate_report(coeffs: OutageCoefficients, allocation: Allocation,
                      config: ScenarioConfig) -> RateReport:
    sinrs = transformed_sinr_all(coeffs, allocation.p_w, allocation.alpha)
    rates = np.array([scheduled_rate(s, config.bandwidth_hz) for s in sinrs])
    return RateReport(
        transformed_sinr=sinrs,
        scheduled_rate_bps=rates,
        average_sumrate_bps=rsu_average_sumrate(rates, config.p_out),
    )


def monte_carlo_outage(allocations: list[Allocation], scenario: Scenario,
                       n_draws: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Empirical Pr[scheduled rate > achievable rate] per vehicle.

    Estimates and large-scale gains stay fixed; only the true fading is
    redrawn around the estimates.  Returns one array per RSU.
    """
    if n_draws < 1:
        raise ValueError(f"n_draws must be at least 1, got {n_draws}")
    cfg = scenario.config
    if len(allocations) != scenario.num_rsus:
        raise ValueError("need one allocation per RSU")
    bs_power_w = dbm_to_watts(cfg.bs_tx_power_dbm)
    noise_w = dbm_to_watts(cfg.noise_power_dbm)
    results = []
    for links, alloc in zip(scenario.rsus, allocations):
        k = len(links)
        coeffs = compute_coefficients(links, cfg)
        sched = np.array([
            scheduled_rate(transformed_sinr(coeffs, j, alloc.p_w, alloc.alpha),
                           cfg.bandwidth_hz)
            for j in range(k)
        ])
        h_est = np.array([l.h_est for l in links])
        g_est = np.array([l.g_est for l in links])
        d2 = np.array([l.large_scale_rsu for l in links])
        dp2 = np.array([l.large_scale_bs for l in links])

        def redraw(center, variance):
            noise = (rng.normal(0.0, 1.0, (n_draws, k))
                     + 1j * rng.normal(0.0, 1.0, (n_draws, k)))
            return center[None, :] + noise * math.sqrt(variance / 2.0)

        h = redraw(h_est, cfg.sigma2_rsu)
        g = redraw(g_est, cfg.sigma2_bs)
        gain_rsu = d2[None, :] * np.abs(h) ** 2          # (n_draws, k)
        gain_bs = dp2[None, :] * np.abs(g) ** 2
        alpha = np.asarray(alloc.alpha, dtype=float)
        tails = np.concatenate([np.cumsum(alpha[::-1])[::-1][1:], [0.0]])
        signal = alloc.p_w * alpha[None, :] * gain_rsu
        interference = (gain_rsu * alloc.p_w * tails[None, :]
                        + gain_bs * bs_power_w + noise_w)
        capacity = cfg.bandwidth_hz * np.log2(1.0 + signal / interference)
        results.append((sched[None, :] > capacity).mean(axis=0))
    return results
