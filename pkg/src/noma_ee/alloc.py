"""Power-allocation factors under QoS: SCA surrogate, Dinkelbach outer
loop, Lagrangian dual decomposition with closed-form updates.

Outer structure per solve:

1. The fractional objective (average sum-rate over consumed power) is
   handled by Dinkelbach's parametric transform F(q) = R - q * power;
   the loop drives F(q) to zero.
2. Each outer iteration lower-bounds log2(1+g) by Pi*log2(g) + Phi,
   tight at the current SINR (the SCA expansion point).
3. The bounded concave problem is solved by a dual sweep: closed-form
   alpha_k given the multipliers, then a projected subgradient step on
   the multipliers.

Numerical conventions that make the textbook updates workable here:

* Multiplier steps are preconditioned per constraint: raw QoS residuals
  live at the watt scale (~1e-10) while the objective lives at bit/s
  (~1e7), so un-scaled steps would leave the multipliers frozen.  The
  step for mu_k is omega(t) * (q / X_k) * normalized-residual, which is
  exactly the plain update applied to the constraint divided by X_k P;
  the closed forms are untouched.
* The step schedule omega0 / sqrt(t) indexes t by sign flips of the
  residual rather than by raw iteration count: the dual here is smooth,
  and decaying on every step stalls far from the optimum.
* The power-budget multiplier is treated as an equality multiplier
  (sign-free): the final allocation always saturates the budget through
  the alpha_1 = 1 - sum rule, exactly like the exhaustive benchmark, and
  reaching that face can require a negative price.
* The weakest vehicle's fraction follows the same closed form during the
  sweep; the saturation rule is applied to each outer iterate.

When the QoS set is non-empty the solve starts from the minimal-power
feasible point (slack on the weakest vehicle) so that every SCA expansion
point is feasible and the surrogate thresholds 2^((Rmin-Phi)/Pi) stay
bounded.  When it is empty the QoS machinery is disabled and the result
is flagged infeasible with per-vehicle diagnostics.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig
from .outage import OutageCoefficients, transformed_sinr_all
from .units import dbm_to_watts

_LN2 = math.log(2.0)
_EXP_CAP = 60.0          # cap on (Rmin - Phi)/Pi; 2^60 already dwarfs any target
_GRAD_CLIP = 1e3         # clip on normalized QoS residuals
_GAMMA_FLOOR = 1e-12


class DualInfeasibleError(RuntimeError):
    """Closed-form denominator went non-positive: the current multipliers
    price vehicle k's power above the objective can pay; shrink the step."""


@dataclass
class ScaPoint:
    """Log-bound coefficients anchored at gamma0: Pi*log2(g) + Phi <= log2(1+g)."""

    gamma0: np.ndarray
    pi: np.ndarray
    phi: np.ndarray


@dataclass
class DualState:
    mu: np.ndarray
    lam: float
    omega1: float = 0.1
    omega2: float = 0.1
    iteration: int = 0
    # oscillation counters: the 1/sqrt(t) decay advances on residual sign flips
    lam_flips: int = 1
    mu_flips: np.ndarray = field(default=None)
    lam_prev_sign: int = 0
    mu_prev_sign: np.ndarray = field(default=None)
    damping: float = 1.0

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        if self.mu_flips is None:
            self.mu_flips = np.ones(len(self.mu), dtype=int)
        if self.mu_prev_sign is None:
            self.mu_prev_sign = np.zeros(len(self.mu), dtype=int)


def new_dual_state(k: int, omega1: float = 0.1, omega2: float = 0.1) -> DualState:
    return DualState(mu=np.zeros(k), lam=0.0, omega1=omega1, omega2=omega2)


@dataclass
class AllocResult:
    alpha: np.ndarray
    q_star: float
    achieved_ee: float
    dinkelbach_iterations: int
    inner_iterations: list
    feasible: bool
    qos_enforced: bool
    converged: bool
    spectral_efficiency: np.ndarray       # log2(1 + gamma*_k) at the final alpha
    qos_margins: np.ndarray               # watts, >= 0 when the constraint holds
    minimal_fractions: np.ndarray         # backward-chain minimal QoS fractions
    form_disagreements: int               # surrogate-form vs plain-form verdicts
    trace: list = field(default_factory=list)

    def trace_csv_rows(self) -> list[str]:
        rows = ["iteration,q,f_value,sum_alpha,max_qos_violation,exact_ee,sumrate_bps"]
        for r in self.trace:
            rows.append("{iteration},{q!r},{f_value!r},{sum_alpha!r},"
                        "{max_qos_violation!r},{exact_ee!r},{sumrate_bps!r}".format(**r))
        return rows


def sca_coefficients(gamma0: np.ndarray) -> ScaPoint:
    """Pi = g/(1+g), Phi = log2(1+g) - Pi*log2(g) at the expansion point."""
    gamma0 = np.asarray(gamma0, dtype=float)
    if np.any(gamma0 <= 0.0):
        raise ValueError("SCA expansion point requires strictly positive SINRs")
    pi = gamma0 / (1.0 + gamma0)
    phi = np.log2(1.0 + gamma0) - pi * np.log2(gamma0)
    return ScaPoint(gamma0=gamma0, pi=pi, phi=phi)


def _qos_thresholds(sca: ScaPoint, r_min: float) -> np.ndarray:
    """Surrogate-form QoS thresholds 2^((Rmin - Phi)/Pi), exponent-capped."""
    expo = np.minimum((r_min - sca.phi) / sca.pi, _EXP_CAP)
    return 2.0 ** expo


def theta_term(l: int, alpha: np.ndarray, mu_l: float, sca: ScaPoint,
               coeffs: OutageCoefficients, p_w: float, threshold_l: float,
               rate_scale: float) -> float:
    """Carry-over of vehicle l's stationarity into later vehicles' closed forms.

    Written with gamma*_l / (X_l alpha_l) reduced to p / (Y_l + Z_l p tail_l)
    so a zero alpha_l does not divide by zero.
    """
    tail = float(np.sum(alpha[l + 1:]))
    denom = coeffs.y[l] + coeffs.z[l] * p_w * tail
    value = rate_scale * sca.pi[l] * coeffs.z[l] * p_w / denom
    if mu_l > 0.0:
        value += _LN2 * mu_l * coeffs.z[l] * p_w * threshold_l
    return value


def closed_form_alpha(k: int, q: float, dual: DualState, sca: ScaPoint,
                      coeffs: OutageCoefficients, p_w: float,
                      alpha_prev: np.ndarray, r_min: float,
                      rate_scale: float) -> float:
    """Stationary alpha_k given the multipliers (0-based k; k = 0 has no
    carry-over sum).  Raises DualInfeasibleError on a non-positive
    denominator; the result is clamped to [0, 1]."""
    thresholds = _qos_thresholds(sca, r_min)
    theta = 0.0
    for l in range(k):
        theta += theta_term(l, alpha_prev, float(dual.mu[l]), sca, coeffs,
                            p_w, float(thresholds[l]), rate_scale)
    den = _LN2 * (q * p_w + dual.lam - dual.mu[k] * coeffs.x[k] * p_w) + theta
    if den <= 0.0:
        raise DualInfeasibleError(
            f"non-positive closed-form denominator for vehicle {k}: {den}")
    return min(1.0, max(0.0, rate_scale * sca.pi[k] / den))


def qos_residuals(alpha: np.ndarray, coeffs: OutageCoefficients, p_w: float,
                  thresholds: np.ndarray) -> np.ndarray:
    """X_k p a_k - threshold_k * (Y_k + Z_k p tail_k) per vehicle, watts."""
    alpha = np.asarray(alpha, dtype=float)
    tails = np.concatenate([np.cumsum(alpha[::-1])[::-1][1:], [0.0]])
    return coeffs.x * p_w * alpha - thresholds * (coeffs.y + coeffs.z * p_w * tails)


def subgradient_update(dual: DualState, alpha: np.ndarray,
                       coeffs: OutageCoefficients, sca: ScaPoint, p_w: float,
                       q: float, r_min: float, enforce_qos: bool = True) -> DualState:
    """One projected subgradient step on (lam, mu), preconditioned per
    constraint and decayed by oscillation count (see module docstring)."""
    alpha = np.asarray(alpha, dtype=float)
    t_lam = dual.lam_flips
    residual = 1.0 - float(alpha.sum())
    sign = 0 if residual == 0.0 else (1 if residual > 0.0 else -1)
    if sign != 0 and dual.lam_prev_sign != 0 and sign != dual.lam_prev_sign:
        t_lam += 1
    w_lam = dual.omega1 * dual.damping / math.sqrt(t_lam)
    lam = dual.lam - w_lam * residual * q * p_w

    mu = dual.mu.copy()
    mu_flips = dual.mu_flips.copy()
    mu_signs = dual.mu_prev_sign.copy()
    if enforce_qos:
        thresholds = _qos_thresholds(sca, r_min)
        raw = qos_residuals(alpha, coeffs, p_w, thresholds)
        normalized = np.clip(raw / (coeffs.x * p_w), -_GRAD_CLIP, _GRAD_CLIP)
        for k in range(len(mu)):
            g = float(normalized[k])
            s = 0 if g == 0.0 else (1 if g > 0.0 else -1)
            if s != 0 and mu_signs[k] != 0 and s != mu_signs[k]:
                mu_flips[k] += 1
            w = dual.omega2 * dual.damping / math.sqrt(mu_flips[k])
            mu[k] = max(0.0, mu[k] - w * g * q / coeffs.x[k])
            if s != 0:
                mu_signs[k] = s
    return DualState(
        mu=mu, lam=lam, omega1=dual.omega1, omega2=dual.omega2,
        iteration=dual.iteration + 1,
        lam_flips=t_lam,
        mu_flips=mu_flips,
        lam_prev_sign=sign if sign != 0 else dual.lam_prev_sign,
        mu_prev_sign=mu_signs,
        damping=dual.damping,
    )


def lagrangian_value(alpha: np.ndarray, dual: DualState, q: float,
                     sca: ScaPoint, coeffs: OutageCoefficients, p_w: float,
                     p_c_w: float, r_min: float, rate_scale: float) -> float:
    """Dinkelbach-transformed Lagrangian at (alpha, mu, lam)."""
    alpha = np.asarray(alpha, dtype=float)
    g = transformed_sinr_all(coeffs, p_w, alpha)
    if np.any(g <= 0.0):
        return -math.inf
    surrogate = rate_scale * float(np.sum(sca.pi * np.log2(g) + sca.phi))
    thresholds = _qos_thresholds(sca, r_min)
    qos = float(np.dot(dual.mu, qos_residuals(alpha, coeffs, p_w, thresholds)))
    return (surrogate - q * (p_w * float(alpha.sum()) + p_c_w)
            + qos + dual.lam * (1.0 - float(alpha.sum())))


def lagrangian_alpha_grad(alpha: np.ndarray, dual: DualState, q: float,
                          sca: ScaPoint, coeffs: OutageCoefficients, p_w: float,
                          r_min: float, rate_scale: float) -> np.ndarray:
    """Analytic gradient of the Lagrangian in alpha."""
    alpha = np.asarray(alpha, dtype=float)
    k_count = len(alpha)
    thresholds = _qos_thresholds(sca, r_min)
    tails = np.concatenate([np.cumsum(alpha[::-1])[::-1][1:], [0.0]])
    interf = coeffs.y + coeffs.z * p_w * tails
    grad = np.empty(k_count)
    for k in range(k_count):
        value = rate_scale * sca.pi[k] / (_LN2 * alpha[k])
        for l in range(k):
            value -= (rate_scale * sca.pi[l] * coeffs.z[l] * p_w
                      / (_LN2 * interf[l]))
            value -= dual.mu[l] * thresholds[l] * coeffs.z[l] * p_w
        value += dual.mu[k] * coeffs.x[k] * p_w
        value -= q * p_w + dual.lam
        grad[k] = value
    return grad


def minimal_power_fractions(coeffs: OutageCoefficients, p_w: float,
                            r_min: float) -> np.ndarray:
    """Backward chain of minimal QoS fractions; every feasible allocation
    dominates it component-wise, so the QoS set is non-empty iff it sums
    to at most one."""
    threshold = 2.0 ** r_min - 1.0
    k_count = coeffs.num_vehicles
    amin = np.zeros(k_count)
    tail = 0.0
    for k in range(k_count - 1, -1, -1):
        amin[k] = threshold * (coeffs.y[k] + coeffs.z[k] * p_w * tail) / (
            coeffs.x[k] * p_w)
        tail += amin[k]
    return amin


def qos_check(alpha: np.ndarray, coeffs: OutageCoefficients, p_w: float,
              r_min: float, rel_tol: float = 1e-6):
    """Plain-form QoS test X p a_k >= (2^Rmin - 1)(Y + Z p tail): per-vehicle
    pass flags and watt margins."""
    threshold = 2.0 ** r_min - 1.0
    thresholds = np.full(coeffs.num_vehicles, threshold)
    margins = qos_residuals(alpha, coeffs, p_w, thresholds)
    rhs = thresholds * (coeffs.y + coeffs.z * p_w
                        * np.concatenate([np.cumsum(np.asarray(alpha)[::-1])[::-1][1:], [0.0]]))
    passes = margins >= -rel_tol * np.maximum(rhs, 1e-300)
    return passes, margins


def binding_vertex(coeffs: OutageCoefficients, p_w: float,
                   r_min: float) -> np.ndarray | None:
    """Budget-saturating point with every QoS constraint tight: bisection on
    the strongest vehicle's fraction.  None when the QoS set is empty.

    Along the feasible sliver the exact energy efficiency increases toward
    this vertex (the strongest vehicle carries the log gains), so it is the
    natural closed-form candidate next to the dual iterate.
    """
    threshold = 2.0 ** r_min - 1.0
    k_count = coeffs.num_vehicles
    amin = minimal_power_fractions(coeffs, p_w, r_min)
    if amin.sum() > 1.0:
        return None

    def chain(x: float) -> np.ndarray:
        a = np.zeros(k_count)
        a[-1] = x
        tail = x
        for k in range(k_count - 2, -1, -1):
            a[k] = threshold * (coeffs.y[k] + coeffs.z[k] * p_w * tail) / (
                coeffs.x[k] * p_w)
            tail += a[k]
        return a

    lo = float(amin[-1])
    hi = 1.0
    if chain(hi).sum() <= 1.0:
        lo = hi
    else:
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if chain(mid).sum() <= 1.0:
                lo = mid
            else:
                hi = mid
    vertex = chain(lo)
    if k_count > 1:
        vertex[0] = 1.0 - vertex[1:].sum()   # hand the rounding slack downward
    else:
        vertex[0] = 1.0
    return vertex


def repair_to_feasible(alpha: np.ndarray, coeffs: OutageCoefficients,
                       p_w: float, r_min: float,
                       amin: np.ndarray) -> np.ndarray:
    """Nearest-by-construction feasible point: raise each fraction to its
    QoS requirement bottom-up, absorb in alpha_1; if the weakest vehicle
    then fails, walk back toward the minimal chain (affine constraints keep
    every intermediate point feasible for vehicles 2..K)."""
    threshold = 2.0 ** r_min - 1.0
    k_count = coeffs.num_vehicles
    repaired = np.asarray(alpha, dtype=float).copy()
    tail = 0.0
    for k in range(k_count - 1, 0, -1):
        need = threshold * (coeffs.y[k] + coeffs.z[k] * p_w * tail) / (
            coeffs.x[k] * p_w)
        repaired[k] = max(repaired[k], need)
        tail += repaired[k]
    repaired[0] = 1.0 - tail

    def weakest_ok(a: np.ndarray) -> bool:
        t = float(a[1:].sum())
        lhs = coeffs.x[0] * p_w * a[0]
        rhs = threshold * (coeffs.y[0] + coeffs.z[0] * p_w * t)
        return a[0] >= 0.0 and lhs >= rhs * (1.0 - 1e-12)

    if weakest_ok(repaired):
        return repaired
    base = amin.copy()
    base[0] = 1.0 - base[1:].sum()
    direction = repaired - base
    lo, hi = 0.0, 1.0
    for _ in range(60):
        s = 0.5 * (lo + hi)
        candidate = base + s * direction
        candidate[0] = 1.0 - candidate[1:].sum()
        if weakest_ok(candidate):
            lo = s
        else:
            hi = s
    candidate = base + lo * direction
    candidate[0] = 1.0 - candidate[1:].sum()
    return candidate


def exact_ee(alpha: np.ndarray, coeffs: OutageCoefficients, p_w: float,
             p_c_w: float, p_out: float, bandwidth_hz: float) -> float:
    """Energy efficiency with the exact transformed rates (not the bound)."""
    g = transformed_sinr_all(coeffs, p_w, np.asarray(alpha, dtype=float))
    rate = (1.0 - p_out) * bandwidth_hz * float(np.log2(1.0 + g).sum())
    return rate / (p_w * float(np.sum(alpha)) + p_c_w)


def _inner_dual_loop(q, sca, coeffs, p_w, dual, alpha_start, r_min, rate_scale,
                     enforce_qos, cap, tol_alpha=1e-10, tol_budget=1e-7,
                     floors=None):
    """Closed-form sweep + subgradient steps until stationarity or cap.

    Works on python floats (K is small, call overhead dominates numpy here).
    On the QoS path the sweep clamps each fraction at its minimal-power floor
    (every feasible point dominates the floor component-wise), which breaks
    the collapse feedback of the carry-over term as a tail goes to zero.
    Returns (alpha, dual, iterations_used).
    """
    k_count = coeffs.num_vehicles
    x = [float(v) for v in coeffs.x]
    y = [float(v) for v in coeffs.y]
    z = [float(v) for v in coeffs.z]
    pi = [float(v) for v in sca.pi]
    thresholds = [float(v) for v in _qos_thresholds(sca, r_min)] if enforce_qos \
        else [0.0] * k_count
    lo = [0.0] * k_count if floors is None else [float(v) for v in floors]
    a = [float(v) for v in alpha_start]
    # multiplier values warm-start across outer iterations, but each inner
    # call is a fresh dual problem (new q, new expansion point): the step
    # schedule restarts or the multipliers cannot re-adapt
    mu = [float(v) for v in dual.mu]
    lam = float(dual.lam)
    lam_flips, lam_sign = 1, 0
    mu_flips = [1] * k_count
    mu_signs = [0] * k_count
    damping = 1.0
    w1, w2 = dual.omega1, dual.omega2
    used = cap

    for t in range(1, cap + 1):
        snapshot = (list(a), list(mu), lam)
        max_delta = 0.0
        retry = False
        for k in range(k_count):
            theta = 0.0
            for l in range(k):
                tail_l = 0.0
                for m in range(l + 1, k_count):
                    tail_l += a[m]
                interf = y[l] + z[l] * p_w * tail_l
                theta += rate_scale * pi[l] * z[l] * p_w / interf
                if enforce_qos and mu[l] > 0.0:
                    theta += _LN2 * mu[l] * z[l] * p_w * thresholds[l]
            den = _LN2 * (q * p_w + lam - mu[k] * x[k] * p_w) + theta
            if den <= 0.0:
                retry = True
                break
            new = rate_scale * pi[k] / den
            new = 1.0 if new > 1.0 else (lo[k] if new < lo[k] else new)
            d = abs(new - a[k])
            if d > max_delta:
                max_delta = d
            a[k] = new
        if retry:
            # the multipliers overpriced a vehicle; restore and damp the steps
            a, mu, lam = snapshot
            damping *= 0.5
            if damping < 1e-12:
                break
            continue

        total = 0.0
        for v in a:
            total += v
        budget_residual = 1.0 - total
        s = 0 if budget_residual == 0.0 else (1 if budget_residual > 0.0 else -1)
        if s != 0 and lam_sign != 0 and s != lam_sign:
            lam_flips += 1
        lam -= (w1 * damping / math.sqrt(lam_flips)) * budget_residual * q * p_w
        if s != 0:
            lam_sign = s

        qos_ok = True
        if enforce_qos:
            for k in range(k_count):
                tail_k = 0.0
                for m in range(k + 1, k_count):
                    tail_k += a[m]
                raw = x[k] * p_w * a[k] - thresholds[k] * (y[k] + z[k] * p_w * tail_k)
                g = raw / (x[k] * p_w)
                g = _GRAD_CLIP if g > _GRAD_CLIP else (-_GRAD_CLIP if g < -_GRAD_CLIP else g)
                sg = 0 if g == 0.0 else (1 if g > 0.0 else -1)
                if sg != 0 and mu_signs[k] != 0 and sg != mu_signs[k]:
                    mu_flips[k] += 1
                mu[k] = max(0.0, mu[k] - (w2 * damping / math.sqrt(mu_flips[k])) * g * q / x[k])
                if sg != 0:
                    mu_signs[k] = sg
                if mu[k] > 0.0:
                    if abs(g) > max(1e-7, 1e-3 * a[k]):
                        qos_ok = False
                elif g < -1e-7:
                    qos_ok = False

        if max_delta < tol_alpha and abs(budget_residual) < tol_budget and qos_ok:
            used = t
            break

    out = DualState(
        mu=np.array(mu), lam=lam, omega1=w1, omega2=w2,
        iteration=dual.iteration + used,
        lam_flips=lam_flips, mu_flips=np.array(mu_flips, dtype=int),
        lam_prev_sign=lam_sign, mu_prev_sign=np.array(mu_signs, dtype=int),
        damping=damping,
    )
    return np.array(a), out, used


def dinkelbach_solve(coeffs: OutageCoefficients, p_w: float,
                     config: ScenarioConfig, q_init: float | None = None,
                     n_max: int = 50, delta_max: float = 1e-6,
                     inner_cap: int = 2000, omega0: float = 0.1) -> AllocResult:
    """Energy-efficient allocation at fixed transmit power.

    Returns the best budget-saturating allocation found: the converged dual
    iterate, checked against the all-constraints-tight vertex when QoS is
    enforced and against the single-vehicle corners when it is not (the SCA
    iteration cannot cross a zero-power boundary, so corners are evaluated
    explicitly).
    """
    k_count = coeffs.num_vehicles
    p_c_w = dbm_to_watts(config.circuit_power_dbm)
    p_out = config.p_out
    bw = config.bandwidth_hz
    r_min = config.r_min_bps_per_hz
    rate_scale = (1.0 - p_out) * bw
    threshold = 2.0 ** r_min - 1.0

    amin = (minimal_power_fractions(coeffs, p_w, r_min) if r_min > 0
            else np.zeros(k_count))
    enforce_qos = r_min > 0 and float(amin.sum()) <= 1.0

    if k_count == 1:
        alpha = np.array([1.0])
        g = transformed_sinr_all(coeffs, p_w, alpha)
        q_star = rate_scale * float(np.log2(1.0 + g[0])) / (p_w + p_c_w)
        passes, margins = qos_check(alpha, coeffs, p_w, r_min)
        rel_violation = float(np.max(np.maximum(-margins, 0.0)
                                     / np.maximum(coeffs.x * p_w - margins, 1e-300)))
        return AllocResult(
            alpha=alpha, q_star=q_star, achieved_ee=q_star,
            dinkelbach_iterations=1, inner_iterations=[0],
            feasible=bool(passes.all()), qos_enforced=enforce_qos,
            converged=True, spectral_efficiency=np.log2(1.0 + g),
            qos_margins=margins, minimal_fractions=amin,
            form_disagreements=0,
            trace=[{"iteration": 1, "q": q_star, "f_value": 0.0,
                    "sum_alpha": 1.0, "max_qos_violation": rel_violation,
                    "exact_ee": q_star,
                    "sumrate_bps": q_star * (p_w + p_c_w)}],
        )

    if enforce_qos:
        alpha = amin.copy()
        alpha[0] += 1.0 - float(amin.sum())
    else:
        weights = 2.0 ** np.arange(k_count - 1, -1, -1)
        alpha = weights / weights.sum()

    # start the parametric iteration at an achievable ratio so F(q0) >= 0 and
    # q climbs monotonically; a no-QoS search EE can exceed the constrained
    # optimum, and starting above the root makes the loop crawl downhill
    start_ee = exact_ee(alpha, coeffs, p_w, p_c_w, p_out, bw)
    q = start_ee if q_init is None else min(q_init, start_ee)
    dual = new_dual_state(k_count, omega0, omega0)
    floors = amin if enforce_qos else None
    trace = []
    inner_iterations = []
    converged = False
    iterations = 0
    current_ee = exact_ee(alpha, coeffs, p_w, p_c_w, p_out, bw)
    for n in range(1, n_max + 1):
        iterations = n
        gamma0 = np.maximum(transformed_sinr_all(coeffs, p_w, alpha), _GAMMA_FLOOR)
        sca = sca_coefficients(gamma0)
        alpha_free, dual, used = _inner_dual_loop(
            q, sca, coeffs, p_w, dual, alpha, r_min, rate_scale,
            enforce_qos, inner_cap, floors=floors)
        inner_iterations.append(used)

        alpha_new = alpha_free.copy()
        tail = float(alpha_new[1:].sum())
        if tail > 1.0:
            alpha_new[1:] /= tail
            tail = 1.0
        alpha_new[0] = 1.0 - tail
        if enforce_qos:
            alpha_new = repair_to_feasible(alpha_new, coeffs, p_w, r_min, amin)

        # safeguarded step: an exact inner maximizer never lowers the true
        # objective, so a degrading iterate is inner-solver residue; keep
        # the current point instead (the refreshed bound is tight there,
        # which pins q and terminates the loop)
        iter_ee = exact_ee(alpha_new, coeffs, p_w, p_c_w, p_out, bw)
        if iter_ee < current_ee:
            alpha_new = alpha
            iter_ee = current_ee

        g_new = np.maximum(transformed_sinr_all(coeffs, p_w, alpha_new),
                           _GAMMA_FLOOR)
        surrogate_rate = rate_scale * float(
            np.sum(sca.pi * np.log2(g_new) + sca.phi))
        consumed = p_w * float(alpha_new.sum()) + p_c_w
        f_value = surrogate_rate - q * consumed
        _, margins = qos_check(alpha_new, coeffs, p_w, r_min)
        lhs = coeffs.x * p_w * alpha_new
        rel_violation = float(np.max(np.maximum(-margins, 0.0)
                                     / np.maximum(lhs - margins, 1e-300)))
        trace.append({
            "iteration": n,
            "q": q,
            "f_value": f_value,
            "sum_alpha": float(alpha_new.sum()),
            "max_qos_violation": rel_violation,
            "exact_ee": iter_ee,
            "sumrate_bps": iter_ee * consumed,
        })
        alpha = alpha_new
        current_ee = iter_ee
        q_next = surrogate_rate / consumed
        if abs(f_value) < delta_max * abs(q * consumed):
            q = q_next
            converged = True
            break
        q = q_next

    candidates = [alpha]
    if enforce_qos:
        vertex = binding_vertex(coeffs, p_w, r_min)
        if vertex is not None:
            candidates.append(vertex)
    else:
        for k in range(k_count):
            corner = np.zeros(k_count)
            corner[k] = 1.0
            candidates.append(corner)
    best = max(candidates,
               key=lambda a: exact_ee(a, coeffs, p_w, p_c_w, p_out, bw))
    achieved = exact_ee(best, coeffs, p_w, p_c_w, p_out, bw)

    g_final = transformed_sinr_all(coeffs, p_w, best)
    passes, margins = qos_check(best, coeffs, p_w, r_min)
    feasible = enforce_qos and bool(passes.all())
    if r_min == 0:
        feasible = True

    gamma_safe = np.maximum(g_final, _GAMMA_FLOOR)
    sca_final = sca_coefficients(gamma_safe)
    surrogate_pass = (sca_final.pi * np.log2(gamma_safe) + sca_final.phi
                      >= r_min - 1e-12)
    plain_pass = g_final >= threshold * (1.0 - 1e-12)
    form_disagreements = int(np.sum(surrogate_pass != plain_pass))

    return AllocResult(
        alpha=best, q_star=q, achieved_ee=achieved,
        dinkelbach_iterations=iterations, inner_iterations=inner_iterations,
        feasible=feasible, qos_enforced=enforce_qos, converged=converged,
        spectral_efficiency=np.log2(1.0 + g_final),
        qos_margins=margins, minimal_fractions=amin,
        form_disagreements=form_disagreements, trace=trace,
    )
