"""Closed-form evaluators: coupon pmf, disappearance orders, fixation and
explosion means, generating and characteristic functions, stationary times.

Alternating inclusion-exclusion sums use compensated accumulation and refuse
results outside [0,1] (or obviously cancelled values) instead of clamping
silently.  Integrals with an algebraic endpoint singularity are evaluated
after the substitution u = (1-y)^(alpha-1), which makes every integrand
bounded and smooth on [0,1].
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations

import numpy as np
from scipy.integrate import quad
from scipy.special import digamma, polygamma

from .measures import full_frequencies, validate_simplex

__all__ = [
    "QuadratureConfig",
    "SeriesConfig",
    "coupon_pmf",
    "coupon_survival",
    "disappearance_order_prob",
    "first_to_disappear_prob",
    "mean_fixation_kingman",
    "mean_fixation_beta",
    "mean_fixation_beta_mixture",
    "mean_explosion_beta",
    "phi_generating",
    "fixation_charfunc_kingman",
    "stationary_time_mean",
]

MAX_D = 25  # 2^d subset enumeration guard

EULER_GAMMA = 0.5772156649015328606


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 200

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0 or self.max_subdivisions < 10:
            raise ValueError("quadrature tolerances must be positive")


@dataclass(frozen=True)
class SeriesConfig:
    tail_tol: float = 1e-10
    max_terms: int = 10**6

    def __post_init__(self):
        if self.tail_tol <= 0 or self.max_terms < 1:
            raise ValueError("series controls must be positive")


DEFAULT_QUAD = QuadratureConfig()
DEFAULT_SERIES = SeriesConfig()


def _check_d(d: int):
    if d > MAX_D:
        raise ValueError(
            f"subset enumeration capped at d = {MAX_D}; got d = {d}"
        )


def _subset_sums(x_full: np.ndarray, ell: int):
    idx = range(x_full.shape[0])
    for comb in combinations(idx, ell):
        yield sum(x_full[i] for i in comb)


def _guard_probability(value: float, label: str) -> float:
    if value < -1e-9 or value > 1.0 + 1e-9:
        raise ArithmeticError(
            f"{label} suffered catastrophic cancellation: got {value}"
        )
    return min(max(value, 0.0), 1.0)


def coupon_survival(x, k: int, p: int) -> float:
    """P(at most k distinct types among the first p i.i.d. draws)."""
    x_full = full_frequencies(x)
    d = x_full.shape[0] - 1
    _check_d(d)
    if not 1 <= k <= d + 1:
        raise ValueError(f"k must lie in [1, d+1], got {k}")
    if p < 0:
        raise ValueError("p must be nonnegative")
    if p == 0 or k == d + 1:
        return 1.0
    terms = []
    for ell in range(1, k + 1):
        coef = (-1.0) ** (k - ell) * math.comb(d - ell, k - ell)
        for s in _subset_sums(x_full, ell):
            terms.append(coef * s**p)
    return _guard_probability(math.fsum(terms), "coupon survival")


def coupon_pmf(x, k: int, p: int) -> float:
    """P(V_k = p): the (k+1)-th distinct type first appears at level p.

    Inclusion-exclusion over type subsets; each subset B of size ell
    contributes (-1)^(k-ell) binom(d-ell, k-ell) x(B)^(p-1) (1 - x(B)).
    """
    x_full = full_frequencies(x)
    d = x_full.shape[0] - 1
    _check_d(d)
    if not 1 <= k <= d + 1:
        raise ValueError(f"k must lie in [1, d+1], got {k}")
    if p < 2:
        raise ValueError("p must be at least 2")
    if k == d + 1:
        return 0.0  # there is no (d+2)-th type
    if p <= k:
        return 0.0
    terms = []
    for ell in range(1, k + 1):
        coef = (-1.0) ** (k - ell) * math.comb(d - ell, k - ell)
        for s in _subset_sums(x_full, ell):
            terms.append(coef * s ** (p - 1) * (1.0 - s))
    return _guard_probability(math.fsum(terms), f"coupon pmf at p={p}")


def disappearance_order_prob(x, order) -> float:
    """Probability of a full disappearance ordering of the d+1 types.

    `order` lists the types (1-based) from the last to disappear down to the
    first to disappear: order[-1] is lost first.  The value is the product of
    x(order[j]) over the sum of frequencies of types order[j..]; zero
    denominators (all remaining frequencies zero) give probability 0.
    """
    x_full = full_frequencies(x)
    d1 = x_full.shape[0]
    order = tuple(int(i) for i in order)
    if sorted(order) != list(range(1, d1 + 1)):
        raise ValueError(f"order must be a permutation of 1..{d1}, got {order}")
    prob = 1.0
    for pos in range(d1):
        denom = math.fsum(x_full[i - 1] for i in order[pos:])
        if denom == 0.0:
            return 0.0
        prob *= x_full[order[pos] - 1] / denom
    return prob


def first_to_disappear_prob(x, eta: int) -> float:
    """P(type eta is the first of the d+1 types to disappear)."""
    x_full = full_frequencies(x)
    d1 = x_full.shape[0]
    if not 1 <= eta <= d1:
        raise ValueError(f"eta must lie in [1, d+1], got {eta}")
    others = [i for i in range(1, d1 + 1) if i != eta]
    total = math.fsum(
        disappearance_order_prob(x, perm + (eta,))
        for perm in permutations(others)
    )
    return _guard_probability(total, "first-to-disappear")


def _xlogx_complement(s: float) -> float:
    """(1 - s) log(1 - s) with the 0 log 0 := 0 convention."""
    if s >= 1.0:
        return 0.0
    return (1.0 - s) * math.log1p(-s)


def mean_fixation_kingman(x, k: int, kingman_mass: float) -> float:
    """Mean time until only k types remain, for the Kingman measure c delta_0.

    Equals -(2/c) sum over ell of (-1)^(k-ell) binom(d-ell, k-ell) times the
    sum of (1 - x(B)) log(1 - x(B)) over type subsets B of size ell.
    """
    if kingman_mass <= 0.0:
        raise ValueError("kingman_mass must be positive")
    x_full = full_frequencies(x)
    d = x_full.shape[0] - 1
    _check_d(d)
    if not 1 <= k <= d + 1:
        raise ValueError(f"k must lie in [1, d+1], got {k}")
    if k == d + 1:
        return 0.0
    terms = []
    for ell in range(1, k + 1):
        coef = (-1.0) ** (k - ell) * math.comb(d - ell, k - ell)
        for s in _subset_sums(x_full, ell):
            terms.append(coef * _xlogx_complement(s))
    value = -(2.0 / kingman_mass) * math.fsum(terms)
    if value < -1e-9:
        raise ArithmeticError(f"negative mean fixation time {value}")
    return max(value, 0.0)


def mean_explosion_beta(
    k: int, alpha: float, quad_cfg: QuadratureConfig = DEFAULT_QUAD
) -> float:
    """Mean explosion time of the line started at level k, pure Beta measure.

    After u = (1-x)^(alpha-1) the defining integral becomes
    alpha (alpha-1) beta int_0^1 (1 - u^beta)^k / (1 - u) du with
    beta = 1/(alpha-1); the integrand is bounded on [0, 1].
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (1, 2)")
    if k < 1:
        raise ValueError("k must be at least 1")
    beta = 1.0 / (alpha - 1.0)

    def integrand(u: float) -> float:
        if u >= 1.0:
            return 0.0 if k >= 2 else beta
        # 1 - u^beta without cancellation near u = 1
        num = -math.expm1(beta * math.log(u)) if u > 0.0 else 1.0
        return num ** (k - 1) * (num / (1.0 - u))

    val, err = quad(
        integrand,
        0.0,
        1.0,
        epsabs=quad_cfg.abs_tol,
        epsrel=quad_cfg.rel_tol,
        limit=quad_cfg.max_subdivisions,
    )
    if not math.isfinite(val) or err > max(
        quad_cfg.abs_tol * 10, abs(val) * quad_cfg.rel_tol * 10
    ):
        raise ArithmeticError(f"explosion-mean quadrature did not converge: {err}")
    return alpha * (alpha - 1.0) * beta * val


@lru_cache(maxsize=4096)
def _beta_subset_integral(s: float, alpha: float) -> float:
    """g(s) = sum over p >= 1 of E[I^p] s^p (1-s), via the substituted integral
    alpha (alpha-1) s (1-s) beta int (1 - u^beta)/((1-s+s u^beta)(1-u)) du."""
    if s <= 0.0 or s >= 1.0:
        return 0.0
    beta = 1.0 / (alpha - 1.0)

    def integrand(u: float) -> float:
        if u >= 1.0:
            return beta
        one_minus_ub = -math.expm1(beta * math.log(u)) if u > 0.0 else 1.0
        ub = 1.0 - one_minus_ub
        return (one_minus_ub / (1.0 - u)) / (1.0 - s + s * ub)

    val, _ = quad(integrand, 0.0, 1.0, epsabs=1e-12, epsrel=1e-10, limit=200)
    return alpha * (alpha - 1.0) * s * (1.0 - s) * beta * val


def mean_fixation_beta(x, k: int, alpha: float) -> float:
    """Mean time until only k types remain, Beta(2-alpha, alpha) measure.

    Fast path: per-subset integrals of the closed form.  The mixture over
    coupon levels (mean_fixation_beta_mixture) is the independent reference.
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (1, 2)")
    x_full = full_frequencies(x)
    d = x_full.shape[0] - 1
    _check_d(d)
    if not 1 <= k <= d + 1:
        raise ValueError(f"k must lie in [1, d+1], got {k}")
    if k == d + 1:
        return 0.0
    terms = []
    for ell in range(1, k + 1):
        coef = (-1.0) ** (k - ell) * math.comb(d - ell, k - ell)
        for s in _subset_sums(x_full, ell):
            terms.append(coef * _beta_subset_integral(round(s, 15), alpha))
    value = math.fsum(terms)
    if value < -1e-9:
        raise ArithmeticError(f"negative mean fixation time {value}")
    return max(value, 0.0)


def mean_fixation_beta_mixture(
    x, k: int, alpha: float, tol: float = 1e-12
) -> float:
    """Reference path: sum over p of E[I^(p-1)] P(V_k = p).

    Truncates when the coupon survival mass times the largest remaining
    explosion mean drops below tol.
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (1, 2)")
    x_full = full_frequencies(x)
    d = x_full.shape[0] - 1
    if not 1 <= k <= d + 1:
        raise ValueError(f"k must lie in [1, d+1], got {k}")
    if k == d + 1:
        return 0.0
    positive = int(np.count_nonzero(x_full > 0.0))
    if k + 1 > positive:
        return 0.0  # fewer than k+1 types present: already fixed
    total = 0.0
    p = k + 1
    while True:
        pmf = coupon_pmf(x, k, p)
        if pmf > 0.0:
            total += pmf * mean_explosion_beta(p - 1, alpha)
        # remaining mass bound: survival of V_k beyond p, explosion means
        # decrease in the start level
        tail_mass = 1.0 - (1.0 - coupon_survival(x, k, p))
        if p > k + 1:
            bound = tail_mass * mean_explosion_beta(p, alpha)
            if bound < tol or tail_mass == 0.0:
                break
        if p > 10_000:
            raise ArithmeticError("coupon mixture failed to converge")
        p += 1
    return total


def _phi0(s: float, alpha: float) -> float:
    """phi^0(s) = (alpha-1) s / ((1-s) - (1-s)^alpha), with phi^0(0) = 1."""
    if s == 0.0:
        return 1.0
    if not 0.0 <= s < 1.0:
        raise ValueError(f"s must lie in [0, 1), got {s}")
    # denominator (1-s)(1 - (1-s)^(alpha-1)) without cancellation
    factor = -math.expm1((alpha - 1.0) * math.log1p(-s))
    return (alpha - 1.0) * s / ((1.0 - s) * factor)


def phi_generating(
    j: int, s: float, alpha: float, quad_cfg: QuadratureConfig = DEFAULT_QUAD
) -> float:
    """Generating functions of the line's renewal structure.

    j = 0 is the closed form; j >= 2 integrates x^(j-2)(1-x)^(alpha-1)
    phi^0(xs) against alpha s^j dx, with s = 1 allowed as the limit (equal to
    the mean explosion time from level j-1).  j = 1 is undefined: the
    integrand carries x^(-1) with a nonvanishing limit at 0, so the integral
    diverges.
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (1, 2)")
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    if j == 0:
        if s == 1.0:
            raise ValueError("phi^0 diverges at s = 1")
        return _phi0(s, alpha)
    if j == 1:
        raise ValueError("phi^1 is divergent (level-0 jump rate vanishes)")
    if j < 0:
        raise ValueError("j must be nonnegative")
    if s == 0.0:
        return 0.0

    # substitute x = 1 - w^m with m = ceil(1/(alpha-1)): the (1-x)^(alpha-1)
    # factor becomes w^(m(alpha-1)) with exponent >= 1, so the integrand is
    # bounded on [0, 1] even where phi^0 blows up (s = 1, w -> 0)
    m = max(2, math.ceil(1.0 / (alpha - 1.0)))
    e_w = m * (alpha - 1.0)

    if s == 1.0:
        def integrand(w: float) -> float:
            if w <= 0.0:
                return m * (alpha - 1.0) if e_w - 1.0 <= 0.0 else 0.0
            if w >= 1.0:
                # limit of (1 - w^m)^(j-1) / (1 - w^e_w)
                return float(m) if j == 2 else 0.0
            denom = -math.expm1(e_w * math.log(w))
            return (
                m
                * (alpha - 1.0)
                * w ** (e_w - 1.0)
                * (1.0 - w**m) ** (j - 1)
                / denom
            )
    else:
        def integrand(w: float) -> float:
            if w <= 0.0 or w >= 1.0:
                return 0.0
            x_ = 1.0 - w**m
            return (
                m
                * w ** (m - 1.0 + e_w)
                * x_ ** (j - 2)
                * _phi0(x_ * s, alpha)
            )

    val, err = quad(
        integrand,
        0.0,
        1.0,
        epsabs=quad_cfg.abs_tol,
        epsrel=quad_cfg.rel_tol,
        limit=quad_cfg.max_subdivisions,
        full_output=1,
    )[:2]
    if not math.isfinite(val) or err > 1e-7 * max(1.0, abs(val)):
        raise ArithmeticError("phi quadrature did not converge")
    return alpha * s**j * val


@lru_cache(maxsize=256)
def _suffix_log_products(t: float, r_cap: int = 10_000) -> np.ndarray:
    """L[p] = -sum over r >= p+1 of log(1 - 2it/(r(r+1))), p = 0..r_cap-1.

    Backward pass over r <= r_cap plus the analytic tail: the linear part
    telescopes to 2it/(r_cap+1) exactly and the quadratic part uses the
    trigamma function; cubic and higher orders are below 1e-15 for |t| <= 50.
    """
    r = np.arange(1, r_cap + 1, dtype=float)
    z = 2j * t / (r * (r + 1.0))
    logs = np.log1p(-z)
    tail_linear = 2j * t / (r_cap + 1.0)
    s2 = polygamma(1, r_cap + 1) + polygamma(1, r_cap + 2) - 2.0 / (r_cap + 1.0)
    # -sum log(1 - z) ~ sum z + sum z^2 / 2 beyond the cap
    tail = tail_linear + 0.5 * (2j * t) ** 2 * s2
    out = np.empty(r_cap, dtype=complex)
    acc = -tail  # running sum of log(1-z_r) beyond the cap equals -tail
    for p in range(r_cap - 1, -1, -1):
        acc += logs[p]
        out[p] = -acc
    return out


def _charfunc_subset_term(s: float, t: float) -> complex:
    """s + (1-s) sum over p >= 1 of s^p (SufProd(p) - 1), SufProd(p) the
    characteristic function of the explosion time from level p (unit mass)."""
    if s <= 0.0:
        return 0.0 + 0.0j
    if t == 0.0:
        return complex(s)
    logs = _suffix_log_products(float(t))
    r_cap = logs.shape[0]
    total = 0.0 + 0.0j
    sp = 1.0
    for p in range(1, r_cap):
        sp *= s
        if sp < 1e-16:
            break
        total += sp * (cmath.exp(logs[p - 1]) - 1.0)
    else:
        # geometric remainder bound for p beyond the cap
        rem = sp * s * (2.0 * abs(t) / r_cap) / max(1.0 - s, 1e-16)
        if rem > 1e-10:
            raise ArithmeticError("characteristic-function series truncated")
    return s + (1.0 - s) * total


def fixation_charfunc_kingman(x, k: int, t: float) -> complex:
    """E[exp(i t T_fix,k)] for the unit Kingman measure.

    For mass c, evaluate at t/c (time scales inversely with the mass).
    """
    x_full = full_frequencies(x)
    d = x_full.shape[0] - 1
    _check_d(d)
    if not 1 <= k <= d + 1:
        raise ValueError(f"k must lie in [1, d+1], got {k}")
    if k == d + 1:
        return 1.0 + 0.0j
    terms = []
    for ell in range(1, k + 1):
        coef = (-1.0) ** (k - ell) * math.comb(d - ell, k - ell)
        for s in _subset_sums(x_full, ell):
            terms.append(coef * _charfunc_subset_term(float(s), float(t)))
    value = complex(math.fsum(v.real for v in terms), math.fsum(v.imag for v in terms))
    if abs(value) > 1.0 + 1e-8:
        raise ArithmeticError(f"characteristic function left the unit disc: {value}")
    return value


def stationary_time_mean(
    kingman_mass: float,
    theta: float,
    method: str = "auto",
    series_cfg: SeriesConfig = DEFAULT_SERIES,
) -> float:
    """Mean of the strong stationary time: sum over j >= 0 of
    1/((j+1)(theta + c j/2)), as a digamma expression or a summed series.

    The digamma form (psi(2 theta/c) + gamma)/(theta - c/2) has a removable
    singularity at theta = c/2, where the series form takes over.
    """
    c = kingman_mass
    if c <= 0.0:
        raise ValueError("kingman_mass must be positive")
    if theta <= 0.0:
        raise ValueError("stationarity requires theta > 0")
    b = 2.0 * theta / c
    if method == "auto":
        method = "series" if abs(b - 1.0) < 1e-6 else "digamma"
    if method == "digamma":
        if abs(b - 1.0) < 1e-14:
            return (2.0 / c) * math.pi**2 / 6.0
        return (digamma(b) + EULER_GAMMA) / (theta - c / 2.0)
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    m = min(series_cfg.max_terms, 10**6)
    j = np.arange(m, dtype=float)
    head = float(np.sum(1.0 / ((j + 1.0) * (j + b))))
    a = m - 0.5  # midpoint integral tail over j > m-1
    if abs(b - 1.0) < 1e-12:
        tail = 1.0 / (a + 1.0)
    else:
        tail = math.log((a + b) / (a + 1.0)) / (b - 1.0)
    return (2.0 / c) * (head + tail)
