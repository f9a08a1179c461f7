"""Pure-python chain kernels; the fallback backend.

Same call signatures and identical arithmetic as the compiled module
``_ckern``: all update probabilities arrive as precomputed tables and the
kernels only compare uniforms against them, so trajectories agree across
backends draw for draw.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def gcwm_chain_run(x, ones, p0, kmin, kmax, idx, u, ones_out):
    """Single banded mean-field chain over one (idx, u) block.

    ``x`` (uint8 spins) is updated in place; ``p0[k]`` is the probability of
    resampling a spin to 0 when the other spins hold ``k`` ones.  Moves
    leaving ``[kmin, kmax]`` are rejected in place (one time step).
    Returns ``(ones, rejections)``.
    """
    xs = np.asarray(x).tolist()
    p0l = [float(v) for v in p0]
    ii = idx.tolist()
    uu = u.tolist()
    ones = int(ones)
    rej = 0
    for t in range(len(ii)):
        i = ii[t]
        old = xs[i]
        k_other = ones - old
        new = 0 if uu[t] < p0l[k_other] else 1
        if new != old:
            cand = ones + (new - old)
            if kmin <= cand <= kmax:
                xs[i] = new
                ones = cand
            else:
                rej += 1
        ones_out[t] = ones
    x[:] = xs
    return ones, rej


def gcwm_quadruple_run(
    xs, ones4, p0_base, p0_tilt, kmin, kmax, lam_kmin, lam_kmax,
    idx, u, counters, step_offset,
):
    """Four coupled banded chains sharing each (coordinate, uniform) draw.

    Chain order: stationary base, stationary tilted, pinned base, pinned
    tilted.  ``counters`` layout (int64, in/out):
    ``[diff base pair, diff tilted pair, dominance defect (pinned base > pinned
    tilted coords), escaped flag, first escape step, order violations before
    escape, rejections]``.
    """
    rows = [np.asarray(xs[c]).tolist() for c in range(4)]
    ones = [int(v) for v in ones4]
    tabs = [
        [float(v) for v in p0_base],
        [float(v) for v in p0_tilt],
        [float(v) for v in p0_base],
        [float(v) for v in p0_tilt],
    ]
    ii = idx.tolist()
    uu = u.tolist()
    diff_b = int(counters[0])
    diff_t = int(counters[1])
    dom = int(counters[2])
    escaped = int(counters[3])
    first_escape = int(counters[4])
    violations = int(counters[5])
    rej = int(counters[6])

    for t in range(len(ii)):
        i = ii[t]
        uv = uu[t]
        olds = (rows[0][i], rows[1][i], rows[2][i], rows[3][i])
        news = [0, 0, 0, 0]
        for c in range(4):
            old = olds[c]
            new = 0 if uv < tabs[c][ones[c] - old] else 1
            if new != old:
                cand = ones[c] + (new - old)
                if kmin <= cand <= kmax:
                    rows[c][i] = new
                    ones[c] = cand
                else:
                    new = old
                    rej += 1
            news[c] = new
        diff_b += (news[2] != news[0]) - (olds[2] != olds[0])
        diff_t += (news[3] != news[1]) - (olds[3] != olds[1])
        dom += (news[2] > news[3]) - (olds[2] > olds[3])
        if not escaped:
            if not (lam_kmin <= ones[2] <= lam_kmax and lam_kmin <= ones[3] <= lam_kmax):
                escaped = 1
                first_escape = step_offset + t
            elif dom > 0:
                violations += 1

    for c in range(4):
        xs[c][:] = rows[c]
        ones4[c] = ones[c]
    counters[0] = diff_b
    counters[1] = diff_t
    counters[2] = dom
    counters[3] = escaped
    counters[4] = first_escape
    counters[5] = violations
    counters[6] = rej


def ergm_chain_run(
    adj, n, eu, ev, p0_table, cond_mode, emin, emax,
    state_table, gamma_windows, gamma_flags,
    idx, u, ecount_out, snap_every, snaps, log_edges, log_acc, counters,
):
    """Single-site edge chain over one (idx, u) block.

    ``adj`` holds per-vertex neighbor bitmasks (uint64, updated in place).
    ``p0_table[s, cd]`` is the absent-probability of an edge whose endpoint
    degree sum (without the edge) is ``s`` and whose endpoints share ``cd``
    neighbors.  ``cond_mode``: 0 none, 1 edge-count window, 2 membership
    lookup by packed edge state, 3 good-set windows (``gamma_windows`` =
    [smin, smax, cdmin, cdmax]) intersected with the edge-count window.
    ``counters``: [edge count, rejections, gamma violation count,
    snapshot cursor, packed state (mode 2), step offset].
    """
    a = [int(v) for v in adj]
    nu = eu.tolist()
    nv = ev.tolist()
    ii = idx.tolist()
    uu = u.tolist()
    p0 = [list(map(float, row)) for row in p0_table]
    ecount = int(counters[0])
    rej = int(counters[1])
    viol = int(counters[2])
    cursor = int(counters[3])
    state = int(counters[4])
    offset = int(counters[5])
    smin = smax = cdmin = cdmax = 0
    flags = None
    if cond_mode == 3:
        smin, smax, cdmin, cdmax = (int(w) for w in gamma_windows)
        flags = list(gamma_flags)
    table = state_table if cond_mode == 2 else None
    track_state = cond_mode == 2
    logging = len(log_edges) > 0

    def edge_ok(x_u, x_v, cur_bit):
        s = (a[x_u].bit_count() + a[x_v].bit_count()) - 2 * cur_bit
        cd = (a[x_u] & a[x_v]).bit_count()
        return (smin <= s <= smax) and (cdmin <= cd <= cdmax)

    for t in range(len(ii)):
        e = ii[t]
        u_, v_ = nu[e], nv[e]
        cur = (a[u_] >> v_) & 1
        s = (a[u_].bit_count() + a[v_].bit_count()) - 2 * cur
        cd = (a[u_] & a[v_]).bit_count()
        new = 0 if uu[t] < p0[s][cd] else 1
        accepted = 1
        if new != cur:
            cand_count = ecount + (new - cur)
            ok = True
            if cond_mode == 1:
                ok = emin <= cand_count <= emax
            elif cond_mode == 2:
                ok = bool(table[state ^ (1 << e)])
            elif cond_mode == 3:
                ok = emin <= cand_count <= emax
                if ok:
                    # tentatively flip, recheck windows on touched edges
                    bu, bv = 1 << v_, 1 << u_
                    if new:
                        a[u_] |= bu
                        a[v_] |= bv
                    else:
                        a[u_] &= ~bu
                        a[v_] &= ~bv
                    delta = 0
                    for w in range(n):
                        if w == u_ or w == v_:
                            continue
                        for (p_, q_) in ((u_, w), (v_, w)):
                            eidx = _pair_index(n, p_, q_)
                            cur_bit = (a[p_] >> q_) & 1
                            okf = 1 if edge_ok(p_, q_, cur_bit) else 0
                            delta += (1 - okf) - (1 - flags[eidx])
                            flags[eidx] = okf
                    ecur = 1 if (a[u_] >> v_) & 1 else 0
                    euv = _pair_index(n, u_, v_)
                    okf = 1 if edge_ok(u_, v_, ecur) else 0
                    delta += (1 - okf) - (1 - flags[euv])
                    flags[euv] = okf
                    if viol + delta > 0:
                        # revert
                        if new:
                            a[u_] &= ~bu
                            a[v_] &= ~bv
                        else:
                            a[u_] |= bu
                            a[v_] |= bv
                        for w in range(n):
                            if w == u_ or w == v_:
                                continue
                            for (p_, q_) in ((u_, w), (v_, w)):
                                eidx = _pair_index(n, p_, q_)
                                cur_bit = (a[p_] >> q_) & 1
                                flags[eidx] = 1 if edge_ok(p_, q_, cur_bit) else 0
                        ecur = 1 if (a[u_] >> v_) & 1 else 0
                        flags[euv] = 1 if edge_ok(u_, v_, ecur) else 0
                        ok = False
                    else:
                        viol += delta
                        ecount = cand_count
                        ok = None  # already applied
            if ok is True:
                bu, bv = 1 << v_, 1 << u_
                if new:
                    a[u_] |= bu
                    a[v_] |= bv
                else:
                    a[u_] &= ~bu
                    a[v_] &= ~bv
                ecount = cand_count
                if track_state:
                    state ^= 1 << e
            elif ok is False:
                accepted = 0
                rej += 1
        ecount_out[t] = ecount
        if logging:
            log_edges[t] = e
            log_acc[t] = accepted
        if snap_every > 0 and (offset + t + 1) % snap_every == 0:
            if cursor < len(snaps):
                for w in range(n):
                    snaps[cursor, w] = a[w]
                cursor += 1

    adj[:] = a
    if cond_mode == 3:
        gamma_flags[:] = flags
    counters[0] = ecount
    counters[1] = rej
    counters[2] = viol
    counters[3] = cursor
    counters[4] = state
    counters[5] = offset + len(ii)


def _pair_index(n, u, v):
    if u > v:
        u, v = v, u
    return u * n - (u * (u + 1)) // 2 + (v - u - 1)


def local_fkg_min(logw, near, support, nbits):
    """Minimum FKG log-ratio over near-ordered pairs of near-region states.

    Pairs (x, y) with ``min(|x \\ y|, |y \\ x|) <= 1`` and both flags in
    ``near``; the ratio is ``-inf`` when the meet or join leaves the
    support.  Returns ``(min_ratio, witness_x, witness_y, pairs)``.
    """
    n_states = 1 << nbits
    states = np.arange(n_states, dtype=np.int64)
    pc = np.zeros(n_states, dtype=np.int64)
    for b in range(nbits):
        pc += (states >> b) & 1
    support = np.asarray(support, dtype=bool)
    # pairs with a zero-mass endpoint hold trivially; keep in-support states only
    near = np.asarray(near, dtype=bool) & support
    lw = np.where(support, logw, -np.inf)
    full = n_states - 1

    best = np.inf
    wx = wy = -1
    pairs = 0
    near_idx = np.nonzero(near)[0]
    for x in near_idx:
        x = int(x)
        b_arr = pc[x & ~states & full]
        c_arr = pc[~x & states & full]
        mask = (np.minimum(b_arr, c_arr) <= 1) & near & (states >= x)
        ys = states[mask]
        if len(ys) == 0:
            continue
        meets = x & ys
        joins = x | ys
        ratios = lw[meets] + lw[joins] - lw[x] - lw[ys]
        pairs += len(ys)
        k = int(np.argmin(ratios))
        if ratios[k] < best:
            best = float(ratios[k])
            wx, wy = x, int(ys[k])
    return best, wx, wy, pairs
