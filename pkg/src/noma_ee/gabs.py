"""Gradient-assisted binary search for the RSU transmit power.

The RSU sum-rate is strictly concave in the transmit power (its second
derivative is negative term by term), so energy efficiency — rate over
affine consumed power — is strictly quasi-concave and the sign of dEE/dP
brackets the unique maximizer: geometric expansion by a factor c > 1
until the sign flips, then plain bisection on the bracket.

The derivative of the k-th rate term collapses to

    X_k a_k Y_k / (ln2 * (Z_k S_k P + X_k a_k P + Y_k) * (Z_k S_k P + Y_k))

with S_k the allocation tail sum; for the strongest vehicle (S_K = 0)
this is X a / (ln2 * (X a P + Y)).
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .outage import OutageCoefficients

_LN2 = math.log(2.0)


@dataclass
class GabsConfig:
    step_factor: float = 2.0
    tolerance_w: float = 1e-4
    p_low_w: float = 10.0 ** ((15.0 - 30.0) / 10.0)
    p_high_w: float = 1.0
    max_iterations: int = 200

    def __post_init__(self):
        if self.step_factor <= 1.0:
            raise ValueError("step_factor must exceed 1")
        if self.tolerance_w <= 0.0:
            raise ValueError("tolerance_w must be positive")
        if not self.p_low_w < self.p_high_w:
            raise ValueError("p_low_w must be below p_high_w")


@dataclass
class GabsResult:
    p_star_w: float
    ee_star: float
    iterations: int
    expansion_steps: int
    bisection_steps: int
    converged: bool
    trace: list = field(default_factory=list)   # (phase, P, dEE/dP, EE) rows

    def trace_csv_rows(self) -> list[str]:
        rows = ["iteration,phase,p_w,dee_dp,ee"]
        for i, (phase, p, dee, ee) in enumerate(self.trace):
            rows.append(f"{i},{phase},{p!r},{dee!r},{ee!r}")
        return rows


def default_fractions(k: int) -> np.ndarray:
    """Descending power fractions 2^(K-1-k), normalized: the plain NOMA
    ordering rule (weakest vehicle gets the largest share), no QoS."""
    weights = 2.0 ** np.arange(k - 1, -1, -1)
    return weights / weights.sum()


def _tail_sums(alpha: np.ndarray) -> np.ndarray:
    return np.concatenate([np.cumsum(alpha[::-1])[::-1][1:], [0.0]])


def sumrate(p_w: float, alpha: np.ndarray, coeffs: OutageCoefficients,
            p_out: float, bandwidth_hz: float) -> float:
    """Average sum-rate (1 - p_out) * BW * sum log2(1 + gamma*_k), bit/s."""
    alpha = np.asarray(alpha, dtype=float)
    tails = _tail_sums(alpha)
    g = coeffs.x * p_w * alpha / (coeffs.y + coeffs.z * p_w * tails)
    return (1.0 - p_out) * bandwidth_hz * float(np.log2(1.0 + g).sum())


def ee_of_power(p_w: float, alpha: np.ndarray, coeffs: OutageCoefficients,
                p_c_w: float, p_out: float, bandwidth_hz: float) -> float:
    """Energy efficiency at transmit power p_w, bit/joule."""
    alpha = np.asarray(alpha, dtype=float)
    return sumrate(p_w, alpha, coeffs, p_out, bandwidth_hz) / (
        p_w * float(alpha.sum()) + p_c_w)


def sumrate_derivative(p_w: float, alpha: np.ndarray, coeffs: OutageCoefficients,
                       p_out: float, bandwidth_hz: float) -> float:
    """d(average sum-rate)/dP, analytic."""
    alpha = np.asarray(alpha, dtype=float)
    tails = _tail_sums(alpha)
    xa = coeffs.x * alpha
    den_low = coeffs.z * tails * p_w + coeffs.y
    den_high = den_low + xa * p_w
    terms = xa * coeffs.y / (den_high * den_low)
    return (1.0 - p_out) * bandwidth_hz * float(terms.sum()) / _LN2


def sumrate_second_derivative(p_w: float, alpha: np.ndarray,
                              coeffs: OutageCoefficients, p_out: float,
                              bandwidth_hz: float) -> float:
    """d^2(average sum-rate)/dP^2, analytic; negative for all feasible inputs."""
    alpha = np.asarray(alpha, dtype=float)
    tails = _tail_sums(alpha)
    xa = coeffs.x * alpha
    zs = coeffs.z * tails
    den_low = zs * p_w + coeffs.y
    den_high = den_low + xa * p_w
    a_num = xa * coeffs.y * (2.0 * zs ** 2 * p_w
                             + 2.0 * zs * (xa * p_w + coeffs.y)
                             + xa * coeffs.y)
    terms = -a_num / (den_low ** 2 * den_high ** 2)
    return (1.0 - p_out) * bandwidth_hz * float(terms.sum()) / _LN2


def ee_derivative(p_w: float, alpha: np.ndarray, coeffs: OutageCoefficients,
                  p_c_w: float, p_out: float, bandwidth_hz: float) -> float:
    """dEE/dP by the quotient rule over the consumed power p_w * sum(alpha) + p_c."""
    alpha = np.asarray(alpha, dtype=float)
    s = float(alpha.sum())
    consumed = p_w * s + p_c_w
    rate = sumrate(p_w, alpha, coeffs, p_out, bandwidth_hz)
    d_rate = sumrate_derivative(p_w, alpha, coeffs, p_out, bandwidth_hz)
    return (d_rate * consumed - rate * s) / consumed ** 2


def iteration_bound(step_factor: float, tolerance_w: float, p_star_w: float) -> int:
    """ceil(log2((c - 1) P* / tolerance - 1)): bisection steps implied by the
    bracket the expansion phase leaves behind."""
    if step_factor <= 1.0 or tolerance_w <= 0.0 or p_star_w <= 0.0:
        raise ValueError("need step_factor > 1 and positive tolerance and power")
    arg = (step_factor - 1.0) * p_star_w / tolerance_w - 1.0
    if arg <= 0.0:
        raise ValueError(
            f"bound undefined: (c-1)*P*/tolerance - 1 = {arg} is not positive")
    return math.ceil(math.log2(arg))


def gabs_search(d_ee: Callable[[float], float], ee: Callable[[float], float],
                config: GabsConfig, p_init: float | None = None) -> GabsResult:
    """Generic sign-driven search; works for any strictly quasi-concave EE.

    Starts from the interval midpoint unless an interior p_init is given
    (the answer is invariant to the start up to the tolerance).
    """
    c = config.step_factor
    lo_bound, hi_bound = config.p_low_w, config.p_high_w
    trace = []
    evals = 0

    def grad(p):
        nonlocal evals
        evals += 1
        return d_ee(p)

    if p_init is None:
        p = 0.5 * (lo_bound + hi_bound)
    else:
        if not lo_bound <= p_init <= hi_bound:
            raise ValueError("p_init must lie within the power bounds")
        p = p_init
    g = grad(p)
    trace.append(("expand", p, g, ee(p)))
    expansion = 1
    lo = hi = p
    bracketed = False
    resolved = False      # bracketed, hit a bound, or found an exact zero
    while evals < config.max_iterations:
        if g > 0.0:
            if p >= hi_bound:
                lo = hi = hi_bound
                resolved = True
                break
            lo, p = p, min(p * c, hi_bound)
        elif g < 0.0:
            if p <= lo_bound:
                lo = hi = lo_bound
                resolved = True
                break
            hi, p = p, max(p / c, lo_bound)
        else:
            lo = hi = p
            resolved = True
            break
        g_new = grad(p)
        expansion += 1
        trace.append(("expand", p, g_new, ee(p)))
        if g > 0.0 and g_new <= 0.0:
            hi = p
            bracketed = resolved = True
            break
        if g < 0.0 and g_new >= 0.0:
            lo = p
            bracketed = resolved = True
            break
        g = g_new
    bisection = 0
    if bracketed:
        while hi - lo > config.tolerance_w and evals < config.max_iterations:
            mid = 0.5 * (lo + hi)
            g_mid = grad(mid)
            bisection += 1
            trace.append(("bisect", mid, g_mid, ee(mid)))
            if g_mid < 0.0:
                hi = mid
            else:
                lo = mid
            if g_mid == 0.0:
                lo = hi = mid
                break
    if not resolved:
        # ran out of evaluations while still expanding: report the last
        # examined point, flagged as non-converged
        lo = hi = p
    p_star = 0.5 * (lo + hi)
    converged = resolved and (not bracketed or (hi - lo) <= config.tolerance_w)
    return GabsResult(
        p_star_w=p_star,
        ee_star=ee(p_star),
        iterations=evals,
        expansion_steps=expansion,
        bisection_steps=bisection,
        converged=converged,
        trace=trace,
    )


def gabs_optimize(coeffs: OutageCoefficients, alpha: np.ndarray,
                  config: GabsConfig, p_c_w: float, p_out: float,
                  bandwidth_hz: float, p_init: float | None = None) -> GabsResult:
    """Optimal RSU transmit power for a fixed allocation."""
    alpha = np.asarray(alpha, dtype=float)
    return gabs_search(
        lambda p: ee_derivative(p, alpha, coeffs, p_c_w, p_out, bandwidth_hz),
        lambda p: ee_of_power(p, alpha, coeffs, p_c_w, p_out, bandwidth_hz),
        config,
        p_init=p_init,
    )
