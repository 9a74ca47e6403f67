"""Ancestral dual chain on d-type block counts with a cemetery state.

The chain counts ancestral lines per type.  Within-type mergers reduce one
coordinate; any merger mixing types, and any mutation to a different type,
kills the chain (cemetery).  The duality function H(x, n) = prod x_i^{n_i}
vanishes at the cemetery, which turns forward frequency moments into survival
functionals of this chain.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .measures import ModelParams, full_frequencies, lambda_rate, total_up_rate

__all__ = ["CEMETERY", "dual_rates", "simulate_dual", "dual_moment", "duality_h"]

CEMETERY = "dagger"


def _multi_merger_total(params: ModelParams, m: int) -> float:
    """Total rate of (0,1]-driven mergers among m blocks: the closed-form
    integral of P(Bin(m, r) >= 2) r^(-2) against the measure."""
    if m < 2:
        return 0.0
    stripped = ModelParams(
        d=params.d,
        lam=type(params.lam)(
            kingman_mass=0.0, beta=params.lam.beta, atoms=params.lam.atoms
        ),
        theta=0.0,
    )
    return total_up_rate(stripped, m - 1)


@lru_cache(maxsize=4096)
def _dual_rates_cached(params: ModelParams, n: tuple[int, ...]):
    c = params.lam.kingman_mass
    theta = params.theta
    nu = params.nu_full
    m = sum(n)
    out: list[tuple[tuple[int, ...] | str, float]] = []
    kill = 0.0

    # Kingman: within-type pair mergers, cross-type pair kills
    for i, ni in enumerate(n):
        if ni >= 2 and c > 0.0:
            tgt = list(n)
            tgt[i] -= 1
            out.append((tuple(tgt), c * math.comb(ni, 2)))
    if c > 0.0:
        for i in range(len(n)):
            for j in range(i + 1, len(n)):
                kill += c * n[i] * n[j]

    # multiple mergers: within type i, k of its n_i lines merge; everything
    # else in the total multi-merger rate kills the chain
    same_type = 0.0
    if params.lam.mass_on_unit_interval > 0.0 and m >= 2:
        for i, ni in enumerate(n):
            for k in range(2, ni + 1):
                rate = math.comb(ni, k) * lambda_rate(params.lam, m, k)
                same_type += rate
                tgt = list(n)
                tgt[i] -= k - 1
                out.append((tuple(tgt), rate))
        total01 = _multi_merger_total(params, m)
        kill += max(total01 - same_type, 0.0)

    # mutation: to own type removes a line, to any other type kills
    if theta > 0.0:
        for i, ni in enumerate(n):
            if ni >= 1:
                if nu[i] > 0.0:
                    tgt = list(n)
                    tgt[i] -= 1
                    out.append((tuple(tgt), theta * ni * nu[i]))
                if nu[i] < 1.0:
                    kill += theta * ni * (1.0 - nu[i])

    if kill > 0.0:
        out.append((CEMETERY, kill))
    # merge duplicate targets (Kingman and k=2 share one)
    merged: dict = {}
    for tgt, rate in out:
        merged[tgt] = merged.get(tgt, 0.0) + rate
    return tuple(merged.items())


def dual_rates(params: ModelParams, n):
    """Outgoing (target, rate) pairs from state n; empty from the cemetery."""
    if isinstance(n, str):
        if n == CEMETERY:
            return []
        raise ValueError(f"unknown state {n!r}")
    n = tuple(int(v) for v in n)
    if len(n) != params.d or any(v < 0 for v in n):
        raise ValueError(f"state must be {params.d} nonnegative counts, got {n}")
    return list(_dual_rates_cached(params, n))


def simulate_dual(params: ModelParams, n0, horizon: float, seed):
    """Gillespie sample of the chain at the horizon; the cemetery absorbs."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    state = n0 if isinstance(n0, str) else tuple(int(v) for v in n0)
    t = 0.0
    while True:
        if state == CEMETERY:
            return state
        moves = dual_rates(params, state)
        total = sum(rate for _, rate in moves)
        if total <= 0.0:
            return state
        t += rng.exponential(1.0 / total)
        if t > horizon:
            return state
        u = rng.random() * total
        for tgt, rate in moves:
            if u < rate:
                state = tgt
                break
            u -= rate


def duality_h(x, n) -> float:
    """H(x, n) = prod over types of x_i^{n_i}; zero at the cemetery."""
    if isinstance(n, str):
        if n == CEMETERY:
            return 0.0
        raise ValueError(f"unknown state {n!r}")
    x_full = full_frequencies(x)
    val = 1.0
    for xi, ni in zip(x_full, n):
        if ni > 0:
            val *= xi**ni
    return val


def dual_moment(params: ModelParams, x, n0, horizon: float, replicates: int, seed):
    """Monte Carlo estimate of E[H(x, A_t)] started from n0."""
    from .reporting import Estimate

    if replicates < 1:
        raise ValueError("need at least one replicate")
    n0 = tuple(int(v) for v in n0)
    if horizon == 0.0:
        return Estimate(mean=duality_h(x, n0), stderr=0.0, n=replicates)
    rng = np.random.default_rng(seed)
    vals = np.empty(replicates)
    for i in range(replicates):
        vals[i] = duality_h(x, simulate_dual(params, n0, horizon, rng))
    return Estimate.from_samples(vals)
