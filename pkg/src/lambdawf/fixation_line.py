"""Fixation-line Markov chains, their inverses, and explosion-time sampling.

The fixation line started at k sits on the nonnegative integers and jumps
upward only.  Its jump rates come from `measures.fixation_jump_rate`.  For
measures that come down from infinity the line explodes in finite time; we
simulate up to a truncation level M and certify the neglected mean time with
a closed-form tail bound.

Two samplers coexist: a generic sequential sampler for arbitrary supported
measures (used for paths and small studies), and vectorised batch samplers
for the pure Kingman and pure Beta cases that estimation relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import betainc, gammaln

from .measures import (
    LambdaSpec,
    ModelParams,
    beta_line_rate,
    comes_down_from_infinity,
    total_up_rate,
)

__all__ = [
    "FixationLinePath",
    "ExplosionSample",
    "simulate_path",
    "sample_explosion",
    "inverse_time",
    "visited_levels",
    "tail_mean_bound",
    "explosion_times_kingman",
    "explosion_times_beta",
    "beta_jump_cdf",
]


@dataclass
class FixationLinePath:
    """Jump times and levels of one simulated line, stopped at a level cap.

    The final jump may overshoot the cap; its recorded level is censored at
    truncation_level, which leaves I^k(n) for n <= truncation_level exact.
    """

    start_level: int
    times: np.ndarray
    levels: np.ndarray
    truncation_level: int

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.levels = np.asarray(self.levels, dtype=np.int64)
        if self.times.shape != self.levels.shape:
            raise ValueError("times and levels must have equal length")
        if self.times.size:
            if np.any(np.diff(self.times) <= 0) or self.times[0] <= 0:
                raise ValueError("jump times must be strictly increasing and positive")
            if np.any(np.diff(self.levels) <= 0) or self.levels[0] <= self.start_level:
                raise ValueError("levels must be strictly increasing from start_level")

    @property
    def jumps(self) -> list[tuple[float, int]]:
        return list(zip(self.times.tolist(), self.levels.tolist()))

    def level_at(self, t: float) -> int:
        idx = int(np.searchsorted(self.times, t, side="right"))
        return self.start_level if idx == 0 else int(self.levels[idx - 1])


@dataclass(frozen=True)
class ExplosionSample:
    """Truncated explosion time: elapsed time to the cap plus a mean tail bound."""

    elapsed: float
    tail_bound: float
    exact: bool = False

    def __post_init__(self):
        if self.tail_bound < 0.0:
            raise ValueError("tail_bound must be nonnegative")
        if self.exact and self.tail_bound != 0.0:
            raise ValueError("exact samples must carry a zero tail bound")


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@lru_cache(maxsize=32)
def _beta_jump_q(alpha: float, length: int) -> np.ndarray:
    """Unnormalised jump-size weights q_1..q_length; q_1 = 1, sum_all = 2/alpha.

    The level-n jump-size weight binom(n+l, l+1) B(l+1-alpha, n+alpha) has the
    n-free ratio (l+1-alpha)/(l+2) between consecutive l, so the jump-size law
    of a pure-Beta line is the same at every level n >= 1.
    """
    q = np.empty(length)
    q[0] = 1.0
    if length > 1:
        l = np.arange(1, length)
        np.cumprod((l + 1.0 - alpha) / (l + 2.0), out=q[1:])
    return q


def beta_jump_cdf(alpha: float, length: int) -> np.ndarray:
    """CDF over jump sizes 1..length with a final lump for sizes > length.

    Returns an array c of size length+1 where c[l-1] = P(jump size <= l) and
    c[length] = 1 (all larger sizes lumped together); exact because the total
    weight is 2/alpha in closed form.
    """
    q = _beta_jump_q(alpha, length)
    total = 2.0 / alpha
    cdf = np.empty(length + 1)
    np.cumsum(q / total, out=cdf[:length])
    cdf[length] = 1.0
    np.minimum(cdf, 1.0, out=cdf)
    return cdf


def _sample_jump_size(params: ModelParams, n: int, M: int, rng) -> int:
    """Draw a jump size at level n, censoring any size that lands at >= M.

    Component weights are exact; within the Beta and atom components sizes are
    drawn by inverse CDF using their n-free / geometric-type term recursions,
    so no truncation of the size distribution is involved below the cap.
    """
    spec = params.lam
    w_lin = params.lam.kingman_mass * 0.5 * (n + 1) * n + params.theta * (n + 1)
    w_beta = (
        spec.beta.scale * beta_line_rate(spec.beta.alpha, n)
        if spec.beta is not None
        else 0.0
    )
    atom_w = []
    for r, w in spec.atoms:
        atom_w.append(w * betainc(2.0, float(n), r) / (r * r) if n >= 1 else 0.0)
    total = w_lin + w_beta + sum(atom_w)
    u = rng.random() * total
    if u < w_lin:
        return 1
    u -= w_lin
    if u < w_beta:
        alpha = spec.beta.alpha
        target = u / w_beta * (2.0 / alpha)
        q = 1.0
        cum = q
        l = 1
        while cum < target and n + l < M:
            q *= (l + 1.0 - alpha) / (l + 2.0)
            cum += q
            l += 1
        return l
    u -= w_beta
    for (r, w), wa in zip(spec.atoms, atom_w):
        if u < wa:
            # A_l = w binom(n+l, l+1) r^(l-1) (1-r)^n, ratio r(n+l+1)/(l+2)
            a = w * 0.5 * (n + 1) * n * (1.0 - r) ** n
            cum = a
            target = u
            l = 1
            while cum < target and n + l < M:
                a *= r * (n + l + 1.0) / (l + 2.0)
                cum += a
                l += 1
            return l
        u -= wa
    return 1


def simulate_path(
    params: ModelParams, k: int, level_cap: int, seed
) -> FixationLinePath:
    """Simulate the line from level k until it first reaches level_cap.

    Holding times are exponential with the closed-form total up-rate; jump
    sizes are sampled exactly per component.  If the measure never comes down
    from infinity the path still terminates because level_cap is finite.
    """
    if level_cap <= k:
        raise ValueError(f"level_cap must exceed k, got cap={level_cap}, k={k}")
    rng = _as_rng(seed)
    t = 0.0
    n = k
    times: list[float] = []
    levels: list[int] = []
    while n < level_cap:
        rate = total_up_rate(params, n)
        if rate <= 0.0:
            break
        t += rng.exponential(1.0 / rate)
        l = _sample_jump_size(params, n, level_cap, rng)
        n = min(n + l, level_cap)
        times.append(t)
        levels.append(n)
    return FixationLinePath(
        start_level=k,
        times=np.array(times),
        levels=np.array(levels, dtype=np.int64),
        truncation_level=level_cap,
    )


def inverse_time(path: FixationLinePath, n: int) -> float:
    """First time the path reaches level >= n; 0 when n <= start_level."""
    if n > path.truncation_level:
        raise ValueError(
            f"level {n} beyond truncation level {path.truncation_level}"
        )
    if n <= path.start_level:
        return 0.0
    idx = int(np.searchsorted(path.levels, n, side="left"))
    if idx >= path.levels.size:
        raise ValueError(f"path stopped below level {n}")
    return float(path.times[idx])


def visited_levels(params: ModelParams, k: int, level_cap: int, seed) -> set[int]:
    """Set of levels visited by one simulated path, including the start level."""
    path = simulate_path(params, k, level_cap, seed)
    return {k} | set(path.levels.tolist())


def _beta_tail_remainder(alpha: float, K: int) -> float:
    """Upper bound on sum over n >= K of alpha Gamma(alpha) Gamma(n)/Gamma(n+alpha).

    The summand is bounded by alpha Gamma(alpha) n^(-alpha) (the ratio
    n^alpha Gamma(n)/Gamma(n+alpha) increases to 1), then integral comparison.
    """
    coef = alpha * math.exp(gammaln(alpha))
    return coef * (K ** (-alpha) + K ** (1.0 - alpha) / (alpha - 1.0))


def tail_mean_bound(params: ModelParams, M: int, terms: int = 200_000) -> float:
    """Upper bound on the expected time the line spends above level M.

    Sums 1/total_up_rate exactly (vectorised) over M..M+terms-1 and bounds the
    remainder through the cheapest single rate component (extra components
    only increase rates, so the bound stays valid).
    """
    if not comes_down_from_infinity(params.lam) and params.theta == 0.0:
        raise ValueError("no finite tail bound: measure does not come down")
    spec = params.lam
    K = M + terms
    n = np.arange(M, K, dtype=float)
    rates = spec.kingman_mass * 0.5 * n * (n + 1.0) + params.theta * (n + 1.0)
    if spec.beta is not None:
        rates = rates + spec.beta.scale * np.exp(
            gammaln(n + spec.beta.alpha) - gammaln(n) - gammaln(spec.beta.alpha + 1.0)
        )
    for r, w in spec.atoms:
        rates = rates + w * betainc(2.0, n, r) / (r * r)
    head = float(np.sum(1.0 / rates))
    remainders = []
    if spec.kingman_mass > 0.0:
        remainders.append(2.0 / (spec.kingman_mass * K))
    if spec.beta is not None:
        remainders.append(_beta_tail_remainder(spec.beta.alpha, K) / spec.beta.scale)
    if params.theta > 0.0:
        # harmonic-like tail diverges; only useful combined with the others
        pass
    if not remainders:
        raise ValueError("no convergent tail component")
    return head + min(remainders)


def sample_explosion(params: ModelParams, k: int, M: int, seed) -> ExplosionSample:
    """One truncated explosion-time draw: time to reach level M plus tail bound."""
    if not comes_down_from_infinity(params.lam):
        raise ValueError("explosion time is infinite: measure does not come down")
    path = simulate_path(params, k, M, seed)
    elapsed = float(path.times[-1]) if path.times.size else 0.0
    return ExplosionSample(elapsed=elapsed, tail_bound=tail_mean_bound(params, M))


def explosion_times_kingman(
    c: float,
    theta: float,
    start_levels,
    M: int,
    seed,
    compensate_tail: bool = True,
    block: int = 8_000_000,
) -> tuple[np.ndarray, float]:
    """Vectorised truncated explosion times for Kingman mass c (plus theta).

    start_levels is an integer array; each replicate sums independent
    exponential holding times over levels start..M-1.  With compensate_tail
    (theta = 0 only) the exact mean of the neglected tail, the telescoping
    sum 2/(cM), is added to every sample; the neglected tail's variance is
    below 4/(3 c^2 M^3), so the compensated samples carry a zero mean-error
    bound.  Otherwise the raw times and the tail mean bound are returned.
    """
    if c <= 0.0:
        raise ValueError("kingman mass must be positive")
    start = np.asarray(start_levels, dtype=np.int64)
    if np.any(start >= M):
        raise ValueError("start levels must lie below the truncation level")
    if theta == 0.0 and np.any(start < 1):
        raise ValueError("start level 0 has zero up-rate when theta = 0")
    base = int(start.min())
    n = np.arange(base, M, dtype=float)
    inv_rates = 1.0 / (c * 0.5 * n * (n + 1.0) + theta * (n + 1.0))
    rng = _as_rng(seed)
    reps = start.shape[0]
    out = np.zeros(reps)
    uniform_start = bool(np.all(start == base))
    step = max(1, block // max(1, reps))
    for lo in range(0, n.shape[0], step):
        hi = min(n.shape[0], lo + step)
        e = rng.standard_exponential((reps, hi - lo))
        if uniform_start:
            out += e @ inv_rates[lo:hi]
        else:
            mask = n[None, lo:hi] >= start[:, None]
            out += (e * mask) @ inv_rates[lo:hi]
    if theta == 0.0:
        tail_mean = 2.0 / (c * M)
        if compensate_tail:
            return out + tail_mean, 0.0
        return out, tail_mean
    params = ModelParams(
        d=1, lam=LambdaSpec(kingman_mass=c), theta=theta, nu=(0.5,)
    )
    return out, tail_mean_bound(params, M)


def explosion_times_beta(
    alpha: float,
    scale: float,
    start_levels,
    M: int,
    seed,
) -> tuple[np.ndarray, float]:
    """Vectorised truncated explosion times for a pure Beta measure.

    Uses the level-independence of the jump-size law: per replicate the level
    path is a renewal walk with i.i.d. increments (sizes landing at or above M
    lumped, which is exact for the stopped time), and holding rates are the
    closed-form per-level totals.
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (1, 2)")
    start = np.asarray(start_levels, dtype=np.int64)
    if np.any(start < 1):
        raise ValueError("pure Beta explosion requires start levels >= 1")
    if np.any(start >= M):
        raise ValueError("start levels must lie below the truncation level")
    rng = _as_rng(seed)
    cdf = beta_jump_cdf(alpha, M)
    reps = start.shape[0]
    times = np.zeros(reps)
    log_norm = gammaln(alpha + 1.0)
    chunk = 10_000
    j_block = 600
    for lo in range(0, reps, chunk):
        hi = min(reps, lo + chunk)
        level = start[lo:hi].astype(np.float64).copy()
        part = np.zeros(hi - lo)
        active = np.arange(hi - lo)
        while active.size:
            u = rng.random((active.size, j_block))
            sizes = (np.searchsorted(cdf, u, side="left") + 1).astype(np.float64)
            lv = level[active, None] + np.concatenate(
                [np.zeros((active.size, 1)), np.cumsum(sizes[:, :-1], axis=1)],
                axis=1,
            )
            holding = lv < M
            rates = scale * np.exp(gammaln(lv + alpha) - gammaln(lv) - log_norm)
            e = rng.standard_exponential((active.size, j_block))
            part[active] += np.sum(np.where(holding, e / rates, 0.0), axis=1)
            level[active] = lv[:, -1] + sizes[:, -1]
            active = active[level[active] < M]
        times[lo:hi] = part
    tail = _beta_tail_remainder(alpha, M) / scale
    return times, tail
