"""Numba kernels for the finite-N lookdown particle system.

The kernel evolves one shared label array (origin ids and uniform marks) under
the three event families; per-initial-condition type arrays ride along under
the identical copy/shift operations, since events never read types or marks.
That makes the grand coupling structural: all initial conditions, and any
re-randomisation of high-level marks, see the same event stream.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# stop_mode values for _lookdown_kernel
STOP_NONE = 0
STOP_PAIR = 1  # stop once pair coincidence seen and tracked line 0 reaches N
STOP_FIX = 2  # stop once initial condition 0 has at most stop_k types left
STOP_LINE = 3  # stop once tracked line 0 reaches stop_k (a level here)


@njit(cache=True)
def _binom_tail_ge2(n: int, r: float) -> float:
    """P(Binomial(n, r) >= 2), stable for all r in (0, 1]."""
    if r >= 1.0 - 1e-12:
        return 1.0
    if n * r > 0.5:
        lq = n * math.log1p(-r)
        q = math.exp(lq)
        q1 = math.exp((n - 1) * math.log1p(-r))
        return 1.0 - q - n * r * q1
    t = 0.5 * n * (n - 1) * r * r * math.exp((n - 2) * math.log1p(-r))
    acc = t
    m = 2
    while m < n:
        t *= (n - m) / (m + 1.0) * r / (1.0 - r)
        acc += t
        m += 1
        if t < 1e-16 * acc:
            break
    return acc


@njit(cache=True)
def _draw_marks(n: int, r: float, marks: np.ndarray) -> int:
    """Fill `marks` with the sorted marked levels of an accepted large event.

    Law: i.i.d. Bernoulli(r) over the n levels conditioned on >= 2 marks.
    Returns the number of marks m >= 2.
    """
    if n * r <= 0.5:
        # inverse CDF on m from the series of P(Bin = m), then a uniform
        # m-subset via a sequential conditional scan
        a = _binom_tail_ge2(n, r)
        target = np.random.random() * a
        t = 0.5 * n * (n - 1) * r * r * math.exp((n - 2) * math.log1p(-r))
        acc = t
        m = 2
        while acc < target and m < n:
            t *= (n - m) / (m + 1.0) * r / (1.0 - r)
            acc += t
            m += 1
        need = m
        pos = 0
        for lev in range(n):
            if np.random.random() * (n - lev) < need:
                marks[pos] = lev
                pos += 1
                need -= 1
                if need == 0:
                    break
        return m
    # Bernoulli scan with rejection; acceptance P(>= 2 marks) >= 0.09 here
    while True:
        m = 0
        for lev in range(n):
            if np.random.random() < r:
                marks[m] = lev
                m += 1
        if m >= 2:
            return m


@njit(cache=True)
def _type_from_u(u: float, cum: np.ndarray) -> int:
    """Smallest index i with cum[i] > u (strict); cum has d+1 entries, last 1."""
    for i in range(cum.shape[0]):
        if cum[i] > u:
            return i
    return cum.shape[0] - 1


@njit(cache=True)
def _lookdown_kernel(
    seed,
    big_n,
    c,
    theta,
    has_beta,
    alpha,
    beta_scale,
    atom_r,
    atom_w,
    nu_cum,
    x_cums,
    u_init,
    horizon,
    sample_times,
    track_ks,
    stop_mode,
    stop_k,
    pair_check,
    pair_v,
    pair_origin_d,
):
    """Run one lookdown path; see lookdown.run for the wrapper contract.

    Levels are 0-based internally; origin ids are 1..N for initial labels and
    negative (minus the event counter) for mutants.  Returns a tuple of
    recorded arrays documented in lookdown.run.
    """
    np.random.seed(seed)
    n_ic = x_cums.shape[0]
    d1 = x_cums.shape[1]  # d + 1 type slots
    n_k = track_ks.shape[0]
    n_s = sample_times.shape[0]

    origin = np.empty(big_n, dtype=np.int64)
    u_arr = np.empty(big_n)
    types = np.empty((n_ic, big_n), dtype=np.int8)
    counts = np.zeros((n_ic, d1), dtype=np.int64)
    origin_counts = np.zeros(big_n + 1, dtype=np.int64)
    mutant_count = 0
    for lev in range(big_n):
        origin[lev] = lev + 1
        u_arr[lev] = u_init[lev]
        origin_counts[lev + 1] = 1
        for ic in range(n_ic):
            tp = _type_from_u(u_init[lev], x_cums[ic])
            types[ic, lev] = tp
            counts[ic, tp] += 1

    t_lost = np.full((n_ic, d1), np.inf)
    for ic in range(n_ic):
        for i in range(d1):
            if counts[ic, i] == 0:
                t_lost[ic, i] = 0.0

    fix_val = np.empty(n_k, dtype=np.int64)
    fix_times = np.zeros((n_k, big_n + 2))
    fix_levels = np.zeros((n_k, big_n + 2), dtype=np.int64)
    fix_len = np.zeros(n_k, dtype=np.int64)
    for ik in range(n_k):
        k = track_ks[ik]
        f = k
        # advance through levels already determined at time 0
        while f < big_n:
            og = origin[f]
            if og < 0 or og <= k:
                f += 1
            else:
                break
        fix_val[ik] = f
        if f > k:
            # time-0 advance is not a jump; start level recorded as f
            pass
        fix_times[ik, 0] = 0.0
        fix_levels[ik, 0] = f
        fix_len[ik] = 1

    snap_counts = np.zeros((n_s, n_ic, d1), dtype=np.int64)
    snap_origin = np.zeros((n_s, big_n + 1), dtype=np.int64)
    snap_mutant = np.zeros(n_s, dtype=np.int64)
    snap_idx = 0

    coincide_time = -1.0
    invariant_ok = True
    if pair_check and n_ic >= 2:
        equal = True
        for i in range(d1):
            if counts[0, i] != counts[1, i]:
                equal = False
        if equal:
            coincide_time = 0.0

    mass01 = 0.0
    if has_beta:
        mass01 += beta_scale
    for ia in range(atom_r.shape[0]):
        mass01 += atom_w[ia]

    pairs = 0.5 * big_n * (big_n - 1)
    rate_kingman = c * pairs
    rate_mut = theta * big_n
    rate_prop = mass01 * pairs
    total = rate_kingman + rate_mut + rate_prop

    marks = np.empty(big_n, dtype=np.int64)
    new_type = np.empty(n_ic, dtype=np.int8)

    t = 0.0
    n_events = 0
    while True:
        if total <= 0.0:
            while snap_idx < n_s:
                for ic in range(n_ic):
                    for i in range(d1):
                        snap_counts[snap_idx, ic, i] = counts[ic, i]
                for j in range(big_n + 1):
                    snap_origin[snap_idx, j] = origin_counts[j]
                snap_mutant[snap_idx] = mutant_count
                snap_idx += 1
            t = horizon
            break
        t_next = t + np.random.exponential(1.0 / total)
        while snap_idx < n_s and sample_times[snap_idx] < t_next:
            for ic in range(n_ic):
                for i in range(d1):
                    snap_counts[snap_idx, ic, i] = counts[ic, i]
            for j in range(big_n + 1):
                snap_origin[snap_idx, j] = origin_counts[j]
            snap_mutant[snap_idx] = mutant_count
            snap_idx += 1
        if t_next > horizon:
            t = horizon
            break
        t = t_next

        u_ev = np.random.random() * total
        m = 0
        if u_ev < rate_kingman:
            # binary reproduction on a uniform unordered pair
            a = np.random.randint(0, big_n)
            b = np.random.randint(0, big_n - 1)
            if b >= a:
                b += 1
            if a < b:
                marks[0] = a
                marks[1] = b
            else:
                marks[0] = b
                marks[1] = a
            m = 2
        elif u_ev < rate_kingman + rate_mut:
            m = -1  # mutation sentinel
        else:
            # large-event proposal: draw r from the normalised (0,1] part,
            # accept with P(Bin(N,r) >= 2)/(binom(N,2) r^2) <= 1
            v = np.random.random() * mass01
            r = 1.0
            if has_beta and v < beta_scale:
                r = np.random.beta(2.0 - alpha, alpha)
            else:
                if has_beta:
                    v -= beta_scale
                for ia in range(atom_r.shape[0]):
                    if v < atom_w[ia]:
                        r = atom_r[ia]
                        break
                    v -= atom_w[ia]
            acc = _binom_tail_ge2(big_n, r) / (pairs * r * r)
            if np.random.random() < acc:
                m = _draw_marks(big_n, r, marks)
            else:
                m = 0  # rejected proposal: no state change

        n_events += 1
        if m == 0:
            continue

        if m == -1:
            # mutation: insert a mutant label at a uniform level
            lev = np.random.randint(0, big_n)
            u_star = np.random.random()
            mut_type = _type_from_u(u_star, nu_cum)
            # dropped label at top level; increment before decrement so a
            # type replaced by itself is not flagged as transiently lost
            og_drop = origin[big_n - 1]
            if og_drop < 0:
                mutant_count -= 1
            else:
                origin_counts[og_drop] -= 1
            for ic in range(n_ic):
                tp_drop = types[ic, big_n - 1]
                counts[ic, mut_type] += 1
                counts[ic, tp_drop] -= 1
                if counts[ic, tp_drop] == 0 and t_lost[ic, tp_drop] == np.inf:
                    t_lost[ic, tp_drop] = t
            for n2 in range(big_n - 1, lev, -1):
                origin[n2] = origin[n2 - 1]
                u_arr[n2] = u_arr[n2 - 1]
                for ic in range(n_ic):
                    types[ic, n2] = types[ic, n2 - 1]
            origin[lev] = -n_events
            u_arr[lev] = u_star
            for ic in range(n_ic):
                types[ic, lev] = mut_type
            mutant_count += 1
        else:
            # reproduction with sorted marks[0..m-1]; parent at marks[0]
            parent_origin = origin[marks[0]]
            parent_u = u_arr[marks[0]]
            for ic in range(n_ic):
                new_type[ic] = types[ic, marks[0]]
            if parent_origin < 0:
                mutant_count += m - 1
            else:
                origin_counts[parent_origin] += m - 1
            for ic in range(n_ic):
                counts[ic, new_type[ic]] += m - 1
            # dropped labels: old 0-based positions big_n-m+1 .. big_n-1
            # (parent increments applied first to avoid spurious zeros)
            for pos in range(big_n - m + 1, big_n):
                og_drop = origin[pos]
                if og_drop < 0:
                    mutant_count -= 1
                else:
                    origin_counts[og_drop] -= 1
                for ic in range(n_ic):
                    tp_drop = types[ic, pos]
                    counts[ic, tp_drop] -= 1
                    if counts[ic, tp_drop] == 0 and t_lost[ic, tp_drop] == np.inf:
                        t_lost[ic, tp_drop] = t
            # rewrite labels top-down: marked levels take the parent label,
            # unmarked level n takes old level n - (#marks <= n) + 1
            mk = m - 1
            for n2 in range(big_n - 1, marks[0], -1):
                while mk >= 0 and marks[mk] > n2:
                    mk -= 1
                if mk >= 0 and marks[mk] == n2:
                    origin[n2] = parent_origin
                    u_arr[n2] = parent_u
                    for ic in range(n_ic):
                        types[ic, n2] = new_type[ic]
                else:
                    shift = mk  # (#marks <= n2) - 1; mk >= 0 here
                    if shift > 0:
                        origin[n2] = origin[n2 - shift]
                        u_arr[n2] = u_arr[n2 - shift]
                        for ic in range(n_ic):
                            types[ic, n2] = types[ic, n2 - shift]

        # advance tracked fixation lines (monotone: prefixes stay determined)
        for ik in range(n_k):
            k = track_ks[ik]
            f = fix_val[ik]
            moved = False
            while f < big_n:
                og = origin[f]
                if og < 0 or og <= k:
                    f += 1
                    moved = True
                else:
                    break
            if moved:
                fix_val[ik] = f
                fix_times[ik, fix_len[ik]] = t
                fix_levels[ik, fix_len[ik]] = f
                fix_len[ik] += 1

        if pair_check and n_ic >= 2:
            if coincide_time < 0.0:
                equal = True
                for i in range(d1):
                    if counts[0, i] != counts[1, i]:
                        equal = False
                        break
                if equal:
                    coincide_time = t
                elif origin_counts[pair_origin_d] > 0:
                    s0 = 0
                    s1 = 0
                    for i in range(pair_v):
                        s0 += counts[0, i]
                        s1 += counts[1, i]
                    if not s0 > s1:
                        invariant_ok = False

        if stop_mode == STOP_PAIR:
            if coincide_time >= 0.0 and fix_val[0] >= big_n:
                break
        elif stop_mode == STOP_FIX:
            remaining = 0
            for i in range(d1):
                if counts[0, i] > 0:
                    remaining += 1
            if remaining <= stop_k:
                break
        elif stop_mode == STOP_LINE:
            if fix_val[0] >= stop_k:
                break

    return (
        t,
        n_events,
        counts,
        snap_counts,
        snap_origin,
        snap_mutant,
        fix_times,
        fix_levels,
        fix_len,
        t_lost,
        coincide_time,
        invariant_ok,
        origin,
        u_arr,
        types,
        origin_counts,
        mutant_count,
    )
