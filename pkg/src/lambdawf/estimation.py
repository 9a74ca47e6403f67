"""Monte Carlo harness: estimators with standard errors, coupled-run
experiments, validation suites, and the simplex heatmap grid.

Every estimator draws its replicate streams from one master seed through
named SeedSequence children, so results are bit-identical regardless of the
worker count; parallel chunks are always reduced in index order.
"""

from __future__ import annotations

import math
import zlib
from collections import Counter
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import formulas as fm
from . import lookdown as ld
from .dual import dual_moment
from .fixation_line import (
    explosion_times_beta,
    explosion_times_kingman,
    sample_explosion,
)
from .measures import (
    BetaComponent,
    LambdaSpec,
    ModelParams,
    full_frequencies,
    total_up_rate,
)
from .reporting import CSV_HEADER, ComparisonReport, Estimate

__all__ = [
    "sample_coupon_level_batch",
    "sample_fixation_times",
    "estimate_fixation_time",
    "estimate_disappearance_order",
    "estimate_stationary_time",
    "stationarity_diagnostics",
    "forward_frequency_samples",
    "forward_moment",
    "duality_check",
    "estimate_fixline_rates",
    "coalescence_experiment",
    "heatmap_grid",
    "write_heatmap_csv",
    "suite_formulas",
    "duality_case_reports",
    "convergence_reports",
    "suite_duality",
    "suite_coalescence",
    "suite_stationarity",
    "run_suite",
    "report_csv",
    "SUITES",
]


def _seed_entropy(seed, label: str) -> list[int]:
    """Entropy list for a named stream; seed may be an int or (int, tag...)."""
    if isinstance(seed, tuple):
        label = label + "/" + "/".join(str(s) for s in seed[1:])
        seed = seed[0]
    return [int(seed) & 0x7FFFFFFF, zlib.crc32(label.encode())]


def _child_seeds(seed, label: str, n: int) -> list[int]:
    """n deterministic stream seeds derived from (master seed, label)."""
    root = np.random.SeedSequence(_seed_entropy(seed, label))
    return [int(c.generate_state(1)[0]) for c in root.spawn(n)]


def _rng_for(seed, label: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(_seed_entropy(seed, label)))


def _run_chunks(fn, chunk_args: list, workers: int) -> list:
    """Apply fn to each args tuple; results in input order regardless of pool."""
    if workers <= 1 or len(chunk_args) <= 1:
        return [fn(*args) for args in chunk_args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *args) for args in chunk_args]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# coupon level / fixation time sampling


def sample_coupon_level_batch(x, k: int, replicates: int, rng) -> np.ndarray:
    """Vector of V_k draws: first position where a (k+1)-th distinct type
    shows up in i.i.d. typing draws under x."""
    x_full = full_frequencies(x)
    cum = np.cumsum(x_full)
    cum[-1] = 1.0
    positive = int(np.count_nonzero(x_full > 0.0))
    if k + 1 > positive:
        raise ValueError(
            f"V_{k} is undefined: only {positive} types have positive mass"
        )
    out = np.zeros(replicates, dtype=np.int64)
    seen = np.zeros((replicates, x_full.shape[0]), dtype=bool)
    distinct = np.zeros(replicates, dtype=np.int64)
    active = np.arange(replicates)
    p = 0
    while active.size:
        p += 1
        t = np.searchsorted(cum, rng.random(active.size), side="right")
        t = np.minimum(t, x_full.shape[0] - 1)
        fresh = ~seen[active, t]
        seen[active, t] = True
        distinct[active] += fresh
        done = distinct[active] == k + 1
        out[active[done]] = p
        active = active[~done]
    return out


def _pure_kingman(params: ModelParams) -> bool:
    spec = params.lam
    return spec.kingman_mass > 0.0 and spec.beta is None and not spec.atoms


def _pure_beta(params: ModelParams) -> bool:
    spec = params.lam
    return spec.kingman_mass == 0.0 and spec.beta is not None and not spec.atoms


def sample_fixation_times(
    params: ModelParams, x, k: int, replicates: int, seed, M: int | None = None
) -> tuple[np.ndarray, float]:
    """Replicates of the time until only k types remain, drawn from the level
    representation: V_k from the shared-uniform typing, then the line's
    truncated explosion time from level V_k - 1.

    Returns (samples, tail_bound); for pure Kingman the neglected tail mean
    is compensated exactly and the bound is 0.
    """
    if params.theta != 0.0:
        raise ValueError("fixation-time sampling requires theta = 0")
    x_full = full_frequencies(x)
    positive = int(np.count_nonzero(x_full > 0.0))
    if k + 1 > positive:
        return np.zeros(replicates), 0.0
    rng = _rng_for(seed, "fixation-coupon")
    v = sample_coupon_level_batch(x, k, replicates, rng)
    start = v - 1
    spec = params.lam
    if _pure_kingman(params):
        m = M if M is not None else 2000
        return explosion_times_kingman(
            spec.kingman_mass, 0.0, start, m, _rng_for(seed, "fixation-explosion")
        )
    if _pure_beta(params):
        m = M if M is not None else 10_000
        return explosion_times_beta(
            spec.beta.alpha,
            spec.beta.scale,
            start,
            m,
            _rng_for(seed, "fixation-explosion"),
        )
    m = M if M is not None else 2000
    rng2 = _rng_for(seed, "fixation-explosion")
    times = np.empty(replicates)
    tail = 0.0
    for i in range(replicates):
        s = sample_explosion(params, int(start[i]), m, rng2)
        times[i] = s.elapsed
        tail = max(tail, s.tail_bound)
    return times, tail


def estimate_fixation_time(
    params: ModelParams, x, k: int, replicates: int, seed, M: int | None = None
) -> tuple[Estimate, float]:
    times, tail = sample_fixation_times(params, x, k, replicates, seed, M)
    return Estimate.from_samples(times), tail


# ---------------------------------------------------------------------------
# disappearance order


def _appearance_orders(x, replicates: int, rng) -> Counter:
    """Counts of type orderings by first appearance in the i.i.d. typing
    stream; the first type to appear survives longest (key order: last lost
    first, matching disappearance_order_prob)."""
    x_full = full_frequencies(x)
    if np.any(x_full <= 0.0):
        raise ValueError("order sampling requires strictly interior x")
    cum = np.cumsum(x_full)
    cum[-1] = 1.0
    d1 = x_full.shape[0]
    orders = np.zeros((replicates, d1), dtype=np.int64)
    filled = np.zeros(replicates, dtype=np.int64)
    seen = np.zeros((replicates, d1), dtype=bool)
    active = np.arange(replicates)
    while active.size:
        t = np.searchsorted(cum, rng.random(active.size), side="right")
        t = np.minimum(t, d1 - 1)
        fresh = ~seen[active, t]
        idx = active[fresh]
        orders[idx, filled[idx]] = t[fresh] + 1
        filled[idx] += 1
        seen[active, t] = True
        active = active[filled[active] < d1]
    return Counter(tuple(row) for row in orders.tolist())


def _lookdown_order_chunk(params, x, N, horizon, seeds) -> Counter:
    counts: Counter = Counter()
    for s in seeds:
        out = ld.run(
            params,
            N,
            horizon,
            [x],
            seed=s,
            stop_mode=ld.STOP_FIX,
            stop_k=1,
        )
        t_lost = out.t_lost[0]
        # survivor has t_lost = inf; sort descending: last lost first
        order = tuple(int(i) + 1 for i in np.argsort(-t_lost, kind="stable"))
        counts[order] += 1
    return counts


def estimate_disappearance_order(
    params: ModelParams,
    x,
    replicates: int,
    seed,
    mode: str = "levels",
    N: int = 200,
    horizon: float = 1e6,
    workers: int = 1,
) -> dict[tuple, Estimate]:
    """Empirical distribution over full disappearance orders (last lost first).

    mode "levels" samples the first-appearance ordering of the shared typing
    stream, exact in law; mode "lookdown" runs the particle system to fixation
    and reads the recorded per-type loss times.
    """
    if params.theta != 0.0:
        raise ValueError("disappearance order requires theta = 0")
    if mode == "levels":
        counts = _appearance_orders(x, replicates, _rng_for(seed, "order-levels"))
    elif mode == "lookdown":
        seeds = _child_seeds(seed, "order-lookdown", replicates)
        step = max(1, (replicates + 4 * max(workers, 1) - 1) // (4 * max(workers, 1)))
        chunks = [
            (params, x, N, horizon, seeds[lo : lo + step])
            for lo in range(0, replicates, step)
        ]
        counts = Counter()
        for part in _run_chunks(_lookdown_order_chunk, chunks, workers):
            counts.update(part)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    out = {}
    for order, c in sorted(counts.items()):
        p = c / replicates
        out[order] = Estimate(
            mean=p, stderr=math.sqrt(p * (1.0 - p) / replicates), n=replicates
        )
    return out


# ---------------------------------------------------------------------------
# stationary time


def _kingman_theta_tail_mean(c: float, theta: float, M: int) -> tuple[float, float]:
    """(numeric tail mean beyond level M, leftover bound) for the level-rate
    sequence c*binom(n+1,2) + theta*(n+1)."""
    n = np.arange(M, M + 2_000_000, dtype=float)
    mean = float(np.sum(1.0 / (c * 0.5 * n * (n + 1.0) + theta * (n + 1.0))))
    leftover = 2.0 / (c * (M + 2_000_000))
    return mean, leftover


def estimate_stationary_time(
    params: ModelParams, replicates: int, seed, M: int = 2000
) -> tuple[Estimate, float]:
    """Mean of the strong stationary time via its exponential-sum
    representation (levels 0..M-1, deterministic tail-mean compensation)."""
    if params.theta <= 0.0:
        raise ValueError("stationarity requires theta > 0")
    if not _pure_kingman(params):
        raise ValueError("exponential-sum sampling implemented for Kingman only")
    c = params.lam.kingman_mass
    start = np.zeros(replicates, dtype=np.int64)
    times, _ = explosion_times_kingman(
        c,
        params.theta,
        start,
        M,
        _rng_for(seed, "stationary"),
        compensate_tail=False,
    )
    tail_mean, leftover = _kingman_theta_tail_mean(c, params.theta, M)
    return Estimate.from_samples(times + tail_mean), leftover


def stationarity_diagnostics(
    params: ModelParams, N: int, pairs: int, seed, workers: int = 1
) -> dict:
    """Kolmogorov-Smirnov diagnostics for the strong-stationary-time claim.

    Runs the particle system until the mutation-determined prefix covers all
    N levels, recording (time, type-1 frequency) pairs; reports the KS
    statistic between frequency samples split at the median time
    (independence) and against fixed-horizon samples (stationarity).
    """
    from scipy.stats import ks_2samp

    seeds = _child_seeds(seed, "stationarity-pairs", pairs)
    t_sat = np.empty(pairs)
    freq = np.empty(pairs)
    for i, s in enumerate(seeds):
        out = ld.run(
            params,
            N,
            1e6,
            [params.nu],
            seed=s,
            track_ks=[0],
            stop_mode=ld.STOP_LINE,
            stop_k=N,
        )
        t_sat[i] = out.final_time
        freq[i] = out.counts_end[0, 0] / N
    below = freq[t_sat <= np.median(t_sat)]
    above = freq[t_sat > np.median(t_sat)]
    ks_indep = ks_2samp(below, above)
    horizon = 2.0 * float(t_sat.mean())
    seeds2 = _child_seeds(seed, "stationarity-horizon", pairs)
    freq_h = np.empty(pairs)
    for i, s in enumerate(seeds2):
        out = ld.run(params, N, horizon, [params.nu], seed=s)
        freq_h[i] = out.counts_end[0, 0] / N
    ks_stat = ks_2samp(freq, freq_h)
    return {
        "mean_time": float(t_sat.mean()),
        "independence_ks": float(ks_indep.statistic),
        "independence_p": float(ks_indep.pvalue),
        "stationarity_ks": float(ks_stat.statistic),
        "stationarity_p": float(ks_stat.pvalue),
        "pairs": pairs,
    }


# ---------------------------------------------------------------------------
# duality


def _forward_chunk(params, ics, ts, N, seeds) -> np.ndarray:
    """(len(seeds), n_ic, len(ts), d+1) frequency snapshots."""
    out = np.empty((len(seeds), len(ics), len(ts), params.d + 1))
    horizon = float(max(ts))
    for i, s in enumerate(seeds):
        run_out = ld.run(params, N, horizon, ics, seed=s, sample_times=ts)
        # snap_counts is (n_ts, n_ic, d+1) in sorted time order
        out[i] = np.transpose(run_out.snap_counts, (1, 0, 2)) / N
    return out


def forward_frequency_samples(
    params: ModelParams,
    ics,
    ts,
    N: int,
    replicates: int,
    seed,
    workers: int = 1,
) -> np.ndarray:
    """Per-replicate frequency vectors of the N-level system at the sample
    times, shape (replicates, n_ic, n_ts, d+1); ts must be given sorted."""
    ts = [float(t) for t in ts]
    if ts != sorted(ts):
        raise ValueError("sample times must be sorted")
    seeds = _child_seeds(seed, "forward", replicates)
    step = max(1, (replicates + 8 * max(workers, 1) - 1) // (8 * max(workers, 1)))
    chunks = [
        (params, ics, ts, N, seeds[lo : lo + step])
        for lo in range(0, replicates, step)
    ]
    parts = _run_chunks(_forward_chunk, chunks, workers)
    return np.concatenate(parts, axis=0)


def _moment_samples(freqs: np.ndarray, n0) -> np.ndarray:
    """prod_i X(i)^{n0_i} over the first d frequency components."""
    out = np.ones(freqs.shape[0])
    for i, p in enumerate(n0):
        if p > 0:
            out *= freqs[:, i] ** p
    return out


def forward_moment(
    params: ModelParams, x, n0, t: float, N: int, replicates: int, seed,
    workers: int = 1,
) -> Estimate:
    freqs = forward_frequency_samples(
        params, [x], [t], N, replicates, seed, workers
    )
    return Estimate.from_samples(_moment_samples(freqs[:, 0, 0, :], n0))


def duality_check(
    params: ModelParams,
    x,
    n0,
    t: float,
    replicates: int,
    seed,
    N: int = 100,
    workers: int = 1,
) -> ComparisonReport:
    """Forward moment of the N-level system vs the ancestral-chain moment.

    The report's estimate carries the combined standard error of both Monte
    Carlo sides, so z compares the difference against its full uncertainty.
    """
    fwd = forward_moment(params, x, n0, t, N, replicates, seed, workers)
    dual = dual_moment(
        params, x, n0, t, replicates, _child_seeds(seed, "dual", 1)[0]
    )
    combined = math.hypot(fwd.stderr, dual.stderr)
    est = Estimate(mean=fwd.mean, stderr=combined, n=fwd.n)
    label = f"d={params.d} n0={tuple(n0)} t={t} theta={params.theta}"
    return ComparisonReport(
        label=label, formula_value=dual.mean, estimate=est, threshold=4.0
    )


# ---------------------------------------------------------------------------
# embedded line rates


def _fixline_chunk(params, N, k, max_level, seeds) -> np.ndarray:
    hold = np.zeros(max_level + 1)
    jumps = np.zeros(max_level + 1)
    for s in seeds:
        out = ld.run(
            params,
            N,
            1e5,
            [[1.0 / (params.d + 1)] * params.d],
            seed=s,
            track_ks=[k],
            stop_mode=ld.STOP_LINE,
            stop_k=max_level + 1,
        )
        path = out.fix_paths[k]
        levels = np.concatenate([[path.start_level], path.levels])
        times = np.concatenate([[0.0], path.times])
        for i in range(times.shape[0] - 1):
            n = int(levels[i])
            if k <= n <= max_level:
                hold[n] += times[i + 1] - times[i]
                jumps[n] += 1
    return np.stack([hold, jumps])


def estimate_fixline_rates(
    params: ModelParams,
    N: int,
    k: int,
    max_level: int,
    runs: int,
    seed,
    workers: int = 1,
) -> list[tuple[int, Estimate, float]]:
    """Occupation-time estimates of the line's jump-out rate per level
    k..max_level, with the closed-form per-level total rate attached."""
    seeds = _child_seeds(seed, "fixline", runs)
    step = max(1, (runs + 8 * max(workers, 1) - 1) // (8 * max(workers, 1)))
    chunks = [
        (params, N, k, max_level, seeds[lo : lo + step])
        for lo in range(0, runs, step)
    ]
    acc = sum(_run_chunks(_fixline_chunk, chunks, workers))
    out = []
    for n in range(max(k, 1), max_level + 1):
        hold, jumps = acc[0, n], acc[1, n]
        if jumps < 2:
            raise ArithmeticError(f"level {n} saw {jumps} jumps; too few runs")
        rate = jumps / hold
        out.append(
            (
                n,
                Estimate(mean=rate, stderr=rate / math.sqrt(jumps), n=int(jumps)),
                total_up_rate(params, n),
            )
        )
    return out


# ---------------------------------------------------------------------------
# coalescence coupling


def _coalescence_chunk(c, N, x1, y1, seeds) -> dict:
    params = ModelParams(d=1, lam=LambdaSpec(kingman_mass=c))
    res = {"checked": 0, "trivial": 0, "time_mismatch": 0, "order_violation": 0}
    for s in seeds:
        rng = np.random.default_rng(s)
        u = rng.random(N)
        kernel_seed = int(rng.integers(0, 2**31 - 1))
        tx = np.where(u < x1, 1, 2)
        ty = np.where(u < y1, 1, 2)
        diff = np.flatnonzero(tx != ty)
        if diff.size == 0:
            continue  # typings identical; nothing to couple
        d_level = int(diff[0]) + 1
        vx, vy = int(tx[d_level - 1]), int(ty[d_level - 1])
        ics = [[x1], [y1]] if vx < vy else [[y1], [x1]]
        pair_v = min(vx, vy)
        if d_level == 1:
            # F^0 is frozen without mutation: no coalescence ever; check that
            # no coincidence happens and the ordering invariant holds
            out = ld.run(
                params, N, 0.3, ics, seed=0,
                u_init=u, kernel_seed=kernel_seed, track_ks=[0],
                pair_check=True, pair_v=pair_v, pair_origin_d=d_level,
            )
            res["trivial"] += 1
            if out.coincide_time >= 0.0:
                res["time_mismatch"] += 1
            if not out.invariant_ok:
                res["order_violation"] += 1
            continue
        out = ld.run(
            params, N, 1e6, ics, seed=0,
            u_init=u, kernel_seed=kernel_seed, track_ks=[d_level - 1],
            stop_mode=ld.STOP_PAIR,
            pair_check=True, pair_v=pair_v, pair_origin_d=d_level,
        )
        path = out.fix_paths[d_level - 1]
        saturated = path.times.size > 0 and path.levels[-1] == N
        res["checked"] += 1
        if not (saturated and out.coincide_time == path.times[-1]):
            res["time_mismatch"] += 1
        if not out.invariant_ok:
            res["order_violation"] += 1
    return res


def coalescence_experiment(
    runs: int,
    seed,
    N: int = 100,
    c: float = 1.0,
    x1: float = 0.3,
    y1: float = 0.7,
    workers: int = 1,
) -> dict:
    """Coupled two-condition runs checking that the first time the two
    frequency vectors coincide is exactly the time the tracked line reaches N,
    and that the partial-sum ordering holds strictly before then."""
    seeds = _child_seeds(seed, "coalescence", runs)
    step = max(1, (runs + 8 * max(workers, 1) - 1) // (8 * max(workers, 1)))
    chunks = [(c, N, x1, y1, seeds[lo : lo + step]) for lo in range(0, runs, step)]
    total = {"checked": 0, "trivial": 0, "time_mismatch": 0, "order_violation": 0}
    for part in _run_chunks(_coalescence_chunk, chunks, workers):
        for key in total:
            total[key] += part[key]
    total["runs"] = runs
    return total


# ---------------------------------------------------------------------------
# heatmap


def heatmap_grid(measure: str, k: int, m: int, kingman_mass: float = 1.0):
    """Mean fixation times on the two-simplex lattice, step 1/m.

    measure is "kingman" or "beta:<alpha>"; rows are (x1, x2, value) with
    x3 = 1 - x1 - x2 implied.
    """
    if m < 1:
        raise ValueError("grid resolution must be >= 1")
    rows = []
    for i in range(m + 1):
        for j in range(m + 1 - i):
            x1, x2 = i / m, j / m
            x = [x1, x2]
            if measure == "kingman":
                val = fm.mean_fixation_kingman(x, k, kingman_mass)
            elif measure.startswith("beta:"):
                val = fm.mean_fixation_beta(x, k, float(measure[5:]))
            else:
                raise ValueError(f"unknown measure {measure!r}")
            rows.append((x1, x2, val))
    return rows


def write_heatmap_csv(rows, path: str):
    with open(path, "w") as fh:
        fh.write("x1,x2,value\n")
        for x1, x2, val in rows:
            fh.write(f"{x1:.10g},{x2:.10g},{val:.10g}\n")


# ---------------------------------------------------------------------------
# validation suites


def _exact_report(label: str, target: float, value: float, tol: float):
    """Deterministic comparison: passes iff |value - target| <= tol."""
    return ComparisonReport(
        label=label,
        formula_value=target,
        estimate=Estimate(mean=value, stderr=0.0, n=1),
        threshold=0.0,
        extra_tolerance=tol,
    )


def _n_reps(base: int, scale: float) -> int:
    return max(100, int(base * scale))


def suite_formulas(seed=0, workers: int = 1, scale: float = 1.0):
    """Closed forms vs Monte Carlo and vs independent reference paths."""
    rows: list[tuple[str, ComparisonReport]] = []

    # Kingman mean fixation times
    for label, x, target in [
        ("d=1 x=0.5", [0.5], 2.0 * math.log(2.0)),
        ("d=2 x=(1/3,1/3)", [1 / 3, 1 / 3], 4.0 * math.log(1.5)),
    ]:
        params = ModelParams(d=len(x), lam=LambdaSpec(kingman_mass=1.0))
        est, tail = estimate_fixation_time(
            params, x, 1, _n_reps(100_000, scale), seed
        )
        rows.append(
            (
                "fix-mean-kingman",
                ComparisonReport(label, target, est, 4.0, extra_tolerance=tail),
            )
        )

    # Kingman explosion means 2/(c p)
    for c in (1.0, 2.0):
        for p in (1, 2, 5, 10):
            reps = _n_reps(100_000, scale)
            times, _ = explosion_times_kingman(
                c,
                0.0,
                np.full(reps, p, dtype=np.int64),
                2000,
                _rng_for(seed, f"explosion-kingman-{c}-{p}"),
            )
            rows.append(
                (
                    "explosion-kingman",
                    ComparisonReport(
                        f"c={c} p={p}",
                        2.0 / (c * p),
                        Estimate.from_samples(times),
                        3.0,
                    ),
                )
            )

    # Beta explosion mean at the truncation level of the acceptance budget
    reps = _n_reps(20_000, scale)
    times, tail = explosion_times_beta(
        1.5,
        1.0,
        np.ones(reps, dtype=np.int64),
        10_000,
        _rng_for(seed, "explosion-beta"),
    )
    rows.append(
        (
            "explosion-beta",
            ComparisonReport(
                "alpha=1.5 k=1",
                fm.mean_explosion_beta(1, 1.5),
                Estimate.from_samples(times),
                4.0,
                extra_tolerance=tail,
            ),
        )
    )

    # Beta mean fixation: fast path vs mixture reference on a 10-point grid
    grid = [
        ([0.5], 1, 1.5),
        ([0.2], 1, 1.5),
        ([0.8], 1, 1.2),
        ([0.35], 1, 1.8),
        ([0.4, 0.3], 1, 1.5),
        ([0.4, 0.3], 2, 1.5),
        ([0.2, 0.5], 1, 1.2),
        ([0.2, 0.5], 2, 1.8),
        ([0.1, 0.1], 1, 1.5),
        ([0.3, 0.3, 0.2], 2, 1.5),
    ]
    for x, k, alpha in grid:
        fast = fm.mean_fixation_beta(x, k, alpha)
        mix = fm.mean_fixation_beta_mixture(x, k, alpha)
        rows.append(
            (
                "fix-mean-beta-paths",
                _exact_report(
                    f"x={x} k={k} alpha={alpha}", fast, mix, 1e-6 * max(fast, 1e-12)
                ),
            )
        )

    # Beta mean fixation vs Monte Carlo at three points
    for x, k, alpha in [([0.5], 1, 1.5), ([0.4, 0.3], 1, 1.5), ([0.2], 1, 1.8)]:
        params = ModelParams(
            d=len(x), lam=LambdaSpec(beta=BetaComponent(alpha=alpha))
        )
        est, tail = estimate_fixation_time(
            params, x, k, _n_reps(20_000, scale), seed
        )
        rows.append(
            (
                "fix-mean-beta-mc",
                ComparisonReport(
                    f"x={x} k={k} alpha={alpha}",
                    fm.mean_fixation_beta(x, k, alpha),
                    est,
                    4.0,
                    extra_tolerance=tail,
                ),
            )
        )

    # coupon pmf vs enumeration and vs direct V_k sampling
    import itertools as it

    for x_full, k in [
        ((0.5, 0.5), 1),
        ((0.5, 0.3, 0.2), 1),
        ((0.5, 0.3, 0.2), 2),
        ((0.25, 0.25, 0.3, 0.2), 2),
    ]:
        x = list(x_full[:-1])
        for p in range(k + 1, 9):
            brute = 0.0
            for seq in it.product(range(len(x_full)), repeat=p):
                w = 1.0
                for sym in seq:
                    w *= x_full[sym]
                if len(set(seq[:-1])) == k and seq[-1] not in set(seq[:-1]):
                    brute += w
            rows.append(
                (
                    "coupon-pmf-enum",
                    _exact_report(
                        f"x={x_full} k={k} p={p}",
                        brute,
                        fm.coupon_pmf(x, k, p),
                        1e-12,
                    ),
                )
            )
    reps = _n_reps(100_000, scale)
    v = sample_coupon_level_batch(
        [0.5, 0.3], 1, reps, _rng_for(seed, "coupon-sample")
    )
    for p in (2, 3, 5):
        hits = (v == p).astype(float)
        rows.append(
            (
                "coupon-pmf-mc",
                ComparisonReport(
                    f"x=(0.5,0.3,0.2) k=1 p={p}",
                    fm.coupon_pmf([0.5, 0.3], 1, p),
                    Estimate.from_samples(hits),
                    4.0,
                ),
            )
        )

    # disappearance order via full particle runs, d = 2
    x = [0.5, 0.3]
    params = ModelParams(d=2, lam=LambdaSpec(kingman_mass=1.0))
    reps = _n_reps(10_000, scale)
    orders = estimate_disappearance_order(
        params, x, reps, seed, mode="lookdown", N=200, workers=workers
    )
    for order in it.permutations((1, 2, 3)):
        target = fm.disappearance_order_prob(x, order)
        est = orders.get(
            order, Estimate(mean=0.0, stderr=math.sqrt(target / reps), n=reps)
        )
        rows.append(
            (
                "disappearance-order",
                ComparisonReport(f"order={order}", target, est, 4.0),
            )
        )

    # characteristic function vs empirical transform of fixation samples
    samples, _ = sample_fixation_times(
        ModelParams(d=1, lam=LambdaSpec(kingman_mass=1.0)),
        [0.5],
        1,
        _n_reps(100_000, scale),
        seed,
    )
    for t in (0.5, 1.0, 2.0):
        val = fm.fixation_charfunc_kingman([0.5], 1, t)
        rows.append(
            (
                "charfunc",
                ComparisonReport(
                    f"t={t} re",
                    val.real,
                    Estimate.from_samples(np.cos(t * samples)),
                    4.0,
                ),
            )
        )
        rows.append(
            (
                "charfunc",
                ComparisonReport(
                    f"t={t} im",
                    val.imag,
                    Estimate.from_samples(np.sin(t * samples)),
                    4.0,
                ),
            )
        )
    h = 1e-4
    der = (
        fm.fixation_charfunc_kingman([0.5], 1, h)
        - fm.fixation_charfunc_kingman([0.5], 1, -h)
    ) / (2.0 * h)
    mean = fm.mean_fixation_kingman([0.5], 1, 1.0)
    rows.append(
        (
            "charfunc",
            _exact_report("derivative-at-0", mean, (der / 1j).real, 1e-4 * mean),
        )
    )

    # heatmap monotonicity: larger alpha gives faster rates, hence smaller
    # mean fixation times, at every lattice node
    panels = {a: heatmap_grid(f"beta:{a}", 1, 10) for a in (1.2, 1.5, 1.8)}
    worst = 0.0
    for r12, r15, r18 in zip(panels[1.2], panels[1.5], panels[1.8]):
        worst = max(worst, r15[2] - r12[2], r18[2] - r15[2])
    rows.append(
        (
            "heatmap-monotone",
            _exact_report("decreasing-in-alpha max violation", 0.0, max(worst, 0.0), 1e-12),
        )
    )
    return rows


def duality_case_reports(seed=0, workers: int = 1, scale: float = 1.0, N: int = 100):
    """Forward-vs-ancestral moment identities on the standard case grid."""
    rows: list[tuple[str, ComparisonReport]] = []
    reps = _n_reps(25_000, scale)
    cases = [
        (
            ModelParams(d=1, lam=LambdaSpec(kingman_mass=1.0)),
            [0.5],
            [(1,), (2,), (3,)],
            [0.25, 1.0],
        ),
        (
            ModelParams(
                d=1, lam=LambdaSpec(kingman_mass=1.0), theta=0.8, nu=(0.6,)
            ),
            [0.4],
            [(2,)],
            [0.25, 1.0],
        ),
        (
            ModelParams(d=2, lam=LambdaSpec(kingman_mass=1.0)),
            [0.3, 0.3],
            [(1, 1), (2, 1)],
            [0.25, 1.0],
        ),
        (
            ModelParams(
                d=2, lam=LambdaSpec(kingman_mass=1.0), theta=0.5, nu=(0.3, 0.3)
            ),
            [0.3, 0.4],
            [(1, 1)],
            [0.25, 1.0],
        ),
        (
            ModelParams(d=2, lam=LambdaSpec(beta=BetaComponent(alpha=1.5))),
            [0.3, 0.3],
            [(2, 1)],
            [0.25],
        ),
    ]
    for ci, (params, x, n0_list, ts) in enumerate(cases):
        freqs = forward_frequency_samples(
            params, [x], ts, N, reps, (seed, f"dual-case-{ci}"), workers
        )
        for n0 in n0_list:
            for it_, t in enumerate(ts):
                fwd = Estimate.from_samples(
                    _moment_samples(freqs[:, 0, it_, :], n0)
                )
                dual = dual_moment(
                    params,
                    x,
                    n0,
                    t,
                    reps,
                    _child_seeds((seed, f"dual-case-{ci}"), f"dual-{n0}-{t}", 1)[0],
                )
                est = Estimate(
                    mean=fwd.mean,
                    stderr=math.hypot(fwd.stderr, dual.stderr),
                    n=fwd.n,
                )
                label = (
                    f"d={params.d} theta={params.theta} "
                    f"beta={params.lam.beta is not None} n0={n0} t={t}"
                )
                rows.append(
                    ("duality", ComparisonReport(label, dual.mean, est, 4.0))
                )
    return rows


def convergence_reports(seed=0, workers: int = 1, scale: float = 1.0):
    """|forward moment - dual moment| shrinks as N grows (paired seeds)."""
    rows: list[tuple[str, ComparisonReport]] = []
    reps_c = _n_reps(8_000, scale)
    triples = [
        (ModelParams(d=1, lam=LambdaSpec(kingman_mass=1.0)), [0.5], (2,), 0.5),
        (ModelParams(d=1, lam=LambdaSpec(kingman_mass=1.0)), [0.3], (3,), 1.0),
        (
            ModelParams(d=2, lam=LambdaSpec(kingman_mass=1.0)),
            [0.3, 0.3],
            (1, 1),
            0.5,
        ),
    ]
    for ti, (params, x, n0, t) in enumerate(triples):
        dual = dual_moment(
            params, x, n0, t, _n_reps(60_000, scale),
            _child_seeds((seed, f"conv-{ti}"), "dual", 1)[0],
        )
        diffs = []
        ses = []
        for n_levels in (10, 50, 250):
            fwd = forward_moment(
                params, x, n0, t, n_levels, reps_c, (seed, f"conv-{ti}"), workers
            )
            diffs.append(abs(fwd.mean - dual.mean))
            ses.append(math.hypot(fwd.stderr, dual.stderr))
        viol = max(
            0.0,
            diffs[1] - diffs[0] - 2.0 * math.hypot(ses[0], ses[1]),
            diffs[2] - diffs[1] - 2.0 * math.hypot(ses[1], ses[2]),
        )
        rows.append(
            (
                "convergence-in-N",
                _exact_report(
                    f"x={x} n0={n0} t={t} trend violation", 0.0, viol, 0.0
                ),
            )
        )
    return rows


def suite_duality(seed=0, workers: int = 1, scale: float = 1.0, N: int = 100):
    """Duality identities plus the convergence-in-N trend."""
    rows = duality_case_reports(seed=seed, workers=workers, scale=scale, N=N)
    rows.extend(convergence_reports(seed=seed, workers=workers, scale=scale))
    return rows


def suite_coalescence(seed=0, workers: int = 1, scale: float = 1.0):
    """Exact coupling identity plus embedded-line jump rates."""
    rows: list[tuple[str, ComparisonReport]] = []
    res = coalescence_experiment(_n_reps(1000, scale), seed, workers=workers)
    rows.append(
        (
            "coalescence",
            _exact_report(
                f"coincidence==saturation over {res['runs']} runs",
                0.0,
                float(res["time_mismatch"]),
                0.0,
            ),
        )
    )
    rows.append(
        (
            "coalescence",
            _exact_report(
                "partial-sum ordering violations", 0.0,
                float(res["order_violation"]), 0.0,
            ),
        )
    )

    runs = _n_reps(4000, scale)
    for name, params in [
        ("kingman", ModelParams(d=1, lam=LambdaSpec(kingman_mass=1.0))),
        (
            "beta1.5",
            ModelParams(d=1, lam=LambdaSpec(beta=BetaComponent(alpha=1.5))),
        ),
    ]:
        rates = estimate_fixline_rates(
            params, 200, 1, 5, runs, (seed, name), workers
        )
        for n, est, formula in rates:
            rows.append(
                (
                    "fixline-rate",
                    ComparisonReport(
                        f"{name} level={n}",
                        formula,
                        est,
                        threshold=0.0,
                        extra_tolerance=0.05 * formula,
                    ),
                )
            )
    return rows


def suite_stationarity(seed=0, workers: int = 1, scale: float = 1.0):
    rows: list[tuple[str, ComparisonReport]] = []
    for c, theta, target in [(2.0, 2.0, 1.0), (2.0, 1.0, math.pi**2 / 6.0)]:
        params = ModelParams(
            d=1, lam=LambdaSpec(kingman_mass=c), theta=theta, nu=(0.5,)
        )
        est, leftover = estimate_stationary_time(
            params, _n_reps(100_000, scale), (seed, f"stat-{c}-{theta}")
        )
        rows.append(
            (
                "stationary-mean",
                ComparisonReport(
                    f"c={c} theta={theta}",
                    target,
                    est,
                    3.0,
                    extra_tolerance=leftover,
                ),
            )
        )
    # evaluator cross-agreement away from the removable singularity
    worst = 0.0
    for c, theta in [(1.0, 0.3), (2.0, 3.0), (0.5, 0.5), (1.3, 0.7), (2.0, 5.0)]:
        a = fm.stationary_time_mean(c, theta, "digamma")
        b = fm.stationary_time_mean(c, theta, "series")
        worst = max(worst, abs(a - b))
    rows.append(
        ("stationary-evaluators", _exact_report("digamma vs series", 0.0, worst, 1e-9))
    )
    # independence / stationarity KS diagnostics at finite N
    params = ModelParams(
        d=1, lam=LambdaSpec(kingman_mass=1.0), theta=1.0, nu=(0.5,)
    )
    diag = stationarity_diagnostics(
        params, 100, _n_reps(2000, scale), (seed, "stat-diag"), workers
    )
    crit = 1.95 * math.sqrt(2.0 / (diag["pairs"] / 2.0))
    rows.append(
        (
            "stationary-diagnostics",
            _exact_report("independence KS", 0.0, diag["independence_ks"], crit),
        )
    )
    crit2 = 1.95 * math.sqrt(2.0 / diag["pairs"])
    rows.append(
        (
            "stationary-diagnostics",
            _exact_report("stationarity KS", 0.0, diag["stationarity_ks"], crit2),
        )
    )
    return rows


SUITES = {
    "formulas": suite_formulas,
    "duality": suite_duality,
    "coalescence": suite_coalescence,
    "stationarity": suite_stationarity,
}


def run_suite(name: str, seed=0, workers: int = 1, scale: float = 1.0):
    """Run one named suite (or "all"); returns (rows, all_passed)."""
    if name == "all":
        rows = []
        for fn in SUITES.values():
            rows.extend(fn(seed=seed, workers=workers, scale=scale))
    elif name in SUITES:
        rows = SUITES[name](seed=seed, workers=workers, scale=scale)
    else:
        raise KeyError(name)
    return rows, all(rep.passed for _, rep in rows)


def report_csv(rows) -> str:
    lines = [CSV_HEADER]
    for experiment, rep in rows:
        lines.append(rep.csv_row(experiment))
    return "\n".join(lines) + "\n"
