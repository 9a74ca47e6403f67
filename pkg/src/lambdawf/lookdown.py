"""Finite-N lookdown particle system under the grand coupling.

One event stream and one set of level uniforms drive every initial condition
simultaneously; per-condition state differs only through the typing function.
The heavy event loop lives in `_kernels`; this module provides the typed
wrapper, a pure-Python single-event reference used as a test oracle, and the
combinatorial level statistics (m_k, V_k, D_{x,y}) of the shared uniforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import STOP_FIX, STOP_LINE, STOP_NONE, STOP_PAIR, _lookdown_kernel
from .fixation_line import FixationLinePath
from .measures import ModelParams, full_frequencies, validate_simplex

__all__ = [
    "type_of",
    "ReproductionEvent",
    "MutationEvent",
    "step_event",
    "LookdownRun",
    "run",
    "embedded_fixation_line",
    "descendant_frequencies",
    "coupon_levels",
    "CouponLevels",
    "STOP_NONE",
    "STOP_PAIR",
    "STOP_FIX",
    "STOP_LINE",
]


def type_of(u: float, x) -> int:
    """Type of the uniform mark u under frequencies x: the smallest i (1-based)
    whose cumulative frequency strictly exceeds u; u = 1 maps to type d+1."""
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"u must lie in [0, 1], got {u}")
    cum = np.cumsum(full_frequencies(x))
    cum[-1] = 1.0
    idx = int(np.searchsorted(cum, u, side="right"))
    return min(idx + 1, cum.shape[0])


@dataclass(frozen=True)
class ReproductionEvent:
    """Reproduction on the sorted marked levels (1-based); parent is the lowest."""

    marks: tuple[int, ...]

    def __post_init__(self):
        marks = tuple(sorted(int(m) for m in self.marks))
        if len(marks) < 2 or len(set(marks)) != len(marks) or marks[0] < 1:
            raise ValueError(f"need >= 2 distinct levels >= 1, got {self.marks}")
        object.__setattr__(self, "marks", marks)


@dataclass(frozen=True)
class MutationEvent:
    """Insertion of a mutant label with mark u at the given level (1-based)."""

    level: int
    u: float

    def __post_init__(self):
        if self.level < 1 or not 0.0 <= self.u <= 1.0:
            raise ValueError(f"bad mutation event ({self.level}, {self.u})")


def step_event(labels: list, event) -> list:
    """Pure-Python reference transition on a list of opaque labels.

    Implements the piecewise relabelling rules directly: the lowest marked
    level keeps its label and copies it onto the other marked levels, each
    unmarked level n takes the old label from n - (#marks <= n) + 1, and a
    mutation inserts a fresh label at its level, shifting the rest up.  The
    list length is preserved; labels shifted beyond it are dropped.
    """
    n = len(labels)
    if isinstance(event, MutationEvent):
        if event.level > n:
            raise ValueError(f"mutation level {event.level} beyond {n} levels")
        out = list(labels)
        out.insert(event.level - 1, ("mutant", event.u))
        return out[:n]
    if isinstance(event, ReproductionEvent):
        if event.marks[-1] > n:
            raise ValueError(f"mark {event.marks[-1]} beyond {n} levels")
        marked = set(event.marks)
        parent = labels[event.marks[0] - 1]
        out = []
        for lev in range(1, n + 1):
            if lev in marked:
                out.append(parent)
            else:
                below = sum(1 for m in event.marks if m <= lev)
                out.append(labels[lev - below + 1 - 1] if below else labels[lev - 1])
        return out
    raise ValueError(f"unsupported event {event!r}")


@dataclass
class LookdownRun:
    """Outputs of one kernel execution; arrays documented field by field."""

    params: ModelParams
    N: int
    horizon: float
    initial_conditions: list[np.ndarray]
    sample_times: np.ndarray
    track_ks: tuple[int, ...]
    u_init: np.ndarray
    final_time: float
    n_events: int
    counts_end: np.ndarray  # (n_ic, d+1) type counts at final_time
    snap_counts: np.ndarray  # (n_samples, n_ic, d+1)
    snap_origin: np.ndarray  # (n_samples, N+1), index j = initial level j
    snap_mutant: np.ndarray  # (n_samples,)
    fix_paths: dict[int, FixationLinePath]
    t_lost: np.ndarray  # (n_ic, d+1) first time each type count hit zero
    coincide_time: float  # first time conditions 0/1 agree; -1 if never
    invariant_ok: bool
    origin_end: np.ndarray
    u_end: np.ndarray
    types_end: np.ndarray

    def frequencies(self, sample_index: int) -> np.ndarray:
        return self.snap_counts[sample_index].astype(float) / self.N

    def frequencies_end(self) -> np.ndarray:
        return self.counts_end.astype(float) / self.N


def _cumulative(x_full: np.ndarray) -> np.ndarray:
    cum = np.cumsum(x_full)
    cum[-1] = 1.0
    return cum


def run(
    params: ModelParams,
    N: int,
    horizon: float,
    initial_conditions,
    seed,
    sample_times=(),
    track_ks=(),
    stop_mode: int = STOP_NONE,
    stop_k: int = 0,
    pair_check: bool = False,
    pair_v: int = 0,
    pair_origin_d: int = 0,
    u_init=None,
    kernel_seed=None,
) -> LookdownRun:
    """Simulate the N-level system to the horizon under the grand coupling.

    All initial conditions share one event stream and one vector of level
    uniforms U(1..N); u_init/kernel_seed let callers re-randomise the
    uniforms while keeping the event stream fixed (and vice versa).
    """
    if N < 2:
        raise ValueError("need N >= 2 levels")
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    ics = [validate_simplex(x, params.d) for x in initial_conditions]
    if not ics:
        raise ValueError("need at least one initial condition")
    rng = np.random.default_rng(seed)
    derived_u = rng.random(N)
    derived_seed = int(rng.integers(0, 2**31 - 1))
    if u_init is None:
        u_init = derived_u
    else:
        u_init = np.asarray(u_init, dtype=float)
        if u_init.shape != (N,):
            raise ValueError(f"u_init must have shape ({N},)")
    if kernel_seed is None:
        kernel_seed = derived_seed
    x_cums = np.stack([_cumulative(full_frequencies(x)) for x in ics])
    nu_cum = _cumulative(params.nu_full)
    spec = params.lam
    atom_r = np.array([r for r, _ in spec.atoms], dtype=float)
    atom_w = np.array([w for _, w in spec.atoms], dtype=float)
    sample_times = np.asarray(sorted(sample_times), dtype=float)
    track_arr = np.asarray(sorted(set(int(k) for k in track_ks)), dtype=np.int64)
    if track_arr.size and (track_arr[0] < 0 or track_arr[-1] > N):
        raise ValueError("tracked fixation-line levels must lie in [0, N]")
    if stop_mode == STOP_PAIR and (not pair_check or track_arr.size == 0):
        raise ValueError("pair stop mode needs pair_check and a tracked line")

    (
        t_end,
        n_events,
        counts_end,
        snap_counts,
        snap_origin,
        snap_mutant,
        fix_times,
        fix_levels,
        fix_len,
        t_lost,
        coincide_time,
        invariant_ok,
        origin_end,
        u_end,
        types_end,
        _origin_counts,
        _mutant_count,
    ) = _lookdown_kernel(
        kernel_seed,
        N,
        spec.kingman_mass,
        params.theta,
        spec.beta is not None,
        spec.beta.alpha if spec.beta is not None else 1.5,
        spec.beta.scale if spec.beta is not None else 0.0,
        atom_r,
        atom_w,
        nu_cum,
        x_cums,
        u_init,
        float(horizon),
        sample_times,
        track_arr,
        stop_mode,
        stop_k,
        pair_check,
        pair_v,
        pair_origin_d,
    )

    fix_paths = {}
    for ik, k in enumerate(track_arr.tolist()):
        L = int(fix_len[ik])
        fix_paths[k] = FixationLinePath(
            start_level=int(fix_levels[ik, 0]),
            times=fix_times[ik, 1:L],
            levels=fix_levels[ik, 1:L],
            truncation_level=N,
        )
    return LookdownRun(
        params=params,
        N=N,
        horizon=horizon,
        initial_conditions=ics,
        sample_times=sample_times,
        track_ks=tuple(track_arr.tolist()),
        u_init=u_init,
        final_time=float(t_end),
        n_events=int(n_events),
        counts_end=counts_end,
        snap_counts=snap_counts,
        snap_origin=snap_origin,
        snap_mutant=snap_mutant,
        fix_paths=fix_paths,
        t_lost=t_lost,
        coincide_time=float(coincide_time),
        invariant_ok=bool(invariant_ok),
        origin_end=origin_end,
        u_end=u_end,
        types_end=types_end,
    )


def embedded_fixation_line(run_out: LookdownRun, k: int) -> FixationLinePath:
    """The tracked line F^k of a run; k must have been passed in track_ks."""
    if k not in run_out.fix_paths:
        raise ValueError(f"fixation line k={k} was not tracked in this run")
    return run_out.fix_paths[k]


def descendant_frequencies(run_out: LookdownRun, t: float) -> np.ndarray:
    """Vector (p^1 .. p^N, mutant fraction) at a requested sample time."""
    idx = np.flatnonzero(np.isclose(run_out.sample_times, t))
    if idx.size == 0:
        raise ValueError(f"t={t} is not one of the run's sample times")
    i = int(idx[0])
    p = run_out.snap_origin[i, 1:].astype(float) / run_out.N
    return np.append(p, run_out.snap_mutant[i] / run_out.N)


@dataclass(frozen=True)
class CouponLevels:
    """First-occurrence statistics of the i.i.d. initial type sequence."""

    m: dict[int, int]  # type -> first level showing that type (under x)
    v: int  # level of the first appearance of the (k+1)-th distinct type
    d_xy: int | None  # first level where x- and y-typings differ


def coupon_levels(x, y=None, seed=0, k: int = 1, cap: int = 10**7) -> CouponLevels:
    """Scan a shared uniform stream for m^x, V_k^x, and D_{x,y}.

    Raises OverflowError if the requested statistics are not all resolved
    within `cap` draws (possible when some frequency is zero).
    """
    x = validate_simplex(x)
    cum_x = _cumulative(full_frequencies(x))
    cum_y = _cumulative(full_frequencies(y)) if y is not None else None
    if not 1 <= k <= x.shape[0] + 1:
        raise ValueError(f"k must lie in [1, d+1], got {k}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    m: dict[int, int] = {}
    v = None
    d_xy = None
    pos = 0
    need_types = int(np.count_nonzero(full_frequencies(x) > 0.0))
    target_distinct = k + 1
    block = 4096
    while pos < cap:
        u = rng.random(block)
        tx = np.searchsorted(cum_x, u, side="right")
        ty = np.searchsorted(cum_y, u, side="right") if cum_y is not None else None
        for j in range(block):
            pos += 1
            t = int(tx[j]) + 1
            if t not in m:
                m[t] = pos
                if v is None and len(m) == target_distinct:
                    v = pos
            if d_xy is None and ty is not None and int(ty[j]) + 1 != t:
                d_xy = pos
            done_v = v is not None or target_distinct > need_types
            done_d = d_xy is not None or ty is None
            if done_v and done_d and len(m) >= need_types:
                return CouponLevels(m=m, v=v if v is not None else -1, d_xy=d_xy)
    raise OverflowError(
        f"coupon statistics unresolved within {cap} draws; "
        f"found types {sorted(m)} of {need_types}"
    )
