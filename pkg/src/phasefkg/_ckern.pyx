# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled chain kernels; drop-in twin of ``phasefkg._pykern``.

Probability tables are precomputed by the drivers, so the hot loops only
compare uniforms against table entries and push bits around; trajectories
agree with the pure-python backend draw for draw.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil

BACKEND = "compiled"


def gcwm_chain_run(x, ones, p0, long long kmin, long long kmax, idx, u, ones_out):
    """Single banded mean-field chain over one (idx, u) block.

    Same contract as the python backend: ``x`` updated in place, moves
    leaving ``[kmin, kmax]`` rejected in place; returns ``(ones, rejections)``.
    """
    cdef unsigned char[::1] xv = x
    cdef double[::1] p0v = np.ascontiguousarray(p0, dtype=np.float64)
    cdef long long[::1] iv = idx
    cdef double[::1] uv = u
    cdef long long[::1] ov = ones_out
    cdef Py_ssize_t t, i
    cdef long long cur_ones = ones, cand, rej = 0
    cdef int old, new

    for t in range(iv.shape[0]):
        i = iv[t]
        old = xv[i]
        new = 0 if uv[t] < p0v[cur_ones - old] else 1
        if new != old:
            cand = cur_ones + (new - old)
            if kmin <= cand <= kmax:
                xv[i] = <unsigned char> new
                cur_ones = cand
            else:
                rej += 1
        ov[t] = cur_ones
    return int(cur_ones), int(rej)


def gcwm_quadruple_run(xs, ones4, p0_base, p0_tilt,
                       long long kmin, long long kmax,
                       long long lam_kmin, long long lam_kmax,
                       idx, u, counters, long long step_offset):
    """Four coupled banded chains sharing each (coordinate, uniform) draw."""
    cdef unsigned char[:, ::1] xv = xs
    cdef long long[::1] onv = ones4
    cdef double[::1] pb = np.ascontiguousarray(p0_base, dtype=np.float64)
    cdef double[::1] pt = np.ascontiguousarray(p0_tilt, dtype=np.float64)
    cdef long long[::1] iv = idx
    cdef double[::1] uv = u
    cdef long long[::1] cv = counters
    cdef Py_ssize_t t, i
    cdef int c, old, new
    cdef long long cand
    cdef double uu
    cdef int olds[4]
    cdef int news[4]
    cdef long long ones[4]
    cdef long long diff_b = cv[0], diff_t = cv[1], dom = cv[2]
    cdef long long escaped = cv[3], first_escape = cv[4]
    cdef long long violations = cv[5], rej = cv[6]

    for c in range(4):
        ones[c] = onv[c]

    for t in range(iv.shape[0]):
        i = iv[t]
        uu = uv[t]
        for c in range(4):
            old = xv[c, i]
            olds[c] = old
            if c == 0 or c == 2:
                new = 0 if uu < pb[ones[c] - old] else 1
            else:
                new = 0 if uu < pt[ones[c] - old] else 1
            if new != old:
                cand = ones[c] + (new - old)
                if kmin <= cand <= kmax:
                    xv[c, i] = <unsigned char> new
                    ones[c] = cand
                else:
                    new = old
                    rej += 1
            news[c] = new
        diff_b += (1 if news[2] != news[0] else 0) - (1 if olds[2] != olds[0] else 0)
        diff_t += (1 if news[3] != news[1] else 0) - (1 if olds[3] != olds[1] else 0)
        dom += (1 if news[2] > news[3] else 0) - (1 if olds[2] > olds[3] else 0)
        if escaped == 0:
            if not (lam_kmin <= ones[2] <= lam_kmax and lam_kmin <= ones[3] <= lam_kmax):
                escaped = 1
                first_escape = step_offset + t
            elif dom > 0:
                violations += 1

    for c in range(4):
        onv[c] = ones[c]
    cv[0] = diff_b
    cv[1] = diff_t
    cv[2] = dom
    cv[3] = escaped
    cv[4] = first_escape
    cv[5] = violations
    cv[6] = rej


cdef inline Py_ssize_t pair_index(Py_ssize_t n, Py_ssize_t u, Py_ssize_t v) nogil:
    cdef Py_ssize_t a = u, b = v
    if a > b:
        a, b = b, a
    return a * n - (a * (a + 1)) // 2 + (b - a - 1)


cdef inline int gamma_edge_ok(unsigned long long* a, Py_ssize_t xu, Py_ssize_t xv,
                              int cur_bit, long long smin, long long smax,
                              long long cdmin, long long cdmax) nogil:
    cdef long long s = (__builtin_popcountll(a[xu]) + __builtin_popcountll(a[xv])) - 2 * cur_bit
    cdef long long cd = __builtin_popcountll(a[xu] & a[xv])
    return 1 if (smin <= s <= smax and cdmin <= cd <= cdmax) else 0


def ergm_chain_run(adj, long long n, eu, ev, p0_table,
                   long long cond_mode, long long emin, long long emax,
                   state_table, gamma_windows, gamma_flags,
                   idx, u, ecount_out, long long snap_every, snaps,
                   log_edges, log_acc, counters):
    """Single-site edge chain over one (idx, u) block; see python backend."""
    cdef unsigned long long[::1] av = adj
    cdef long long[::1] euv = eu
    cdef long long[::1] evv = ev
    cdef double[:, ::1] p0 = np.ascontiguousarray(p0_table, dtype=np.float64)
    cdef unsigned char[::1] table
    cdef long long[::1] gw
    cdef unsigned char[::1] flags
    cdef long long[::1] iv = idx
    cdef double[::1] uv = u
    cdef long long[::1] ecv = ecount_out
    cdef unsigned long long[:, ::1] snv
    cdef long long[::1] lev
    cdef unsigned char[::1] lav
    cdef long long[::1] cv = counters

    cdef Py_ssize_t t, w, e, u_, v_, eidx, euv_i
    cdef long long ecount = cv[0], rej = cv[1], viol = cv[2]
    cdef long long cursor = cv[3], state = cv[4], offset = cv[5]
    cdef long long smin = 0, smax = 0, cdmin = 0, cdmax = 0
    cdef long long s, cd, cand_count, delta
    cdef int cur, new, accepted, okf, cur_bit, track_state, logging, ok
    cdef unsigned long long bu, bv
    cdef unsigned long long* a = &av[0]

    if cond_mode == 2:
        table = state_table
    else:
        table = np.zeros(1, dtype=np.uint8)
    if cond_mode == 3:
        gw = gamma_windows
        smin = gw[0]; smax = gw[1]; cdmin = gw[2]; cdmax = gw[3]
        flags = gamma_flags
    else:
        flags = np.zeros(1, dtype=np.uint8)
    track_state = 1 if cond_mode == 2 else 0
    logging = 1 if log_edges.shape[0] > 0 else 0
    if logging:
        lev = log_edges
        lav = log_acc
    if snap_every > 0:
        snv = snaps
    else:
        snv = np.zeros((1, 1), dtype=np.uint64)

    for t in range(iv.shape[0]):
        e = iv[t]
        u_ = euv[e]
        v_ = evv[e]
        cur = <int> ((a[u_] >> v_) & 1)
        s = (__builtin_popcountll(a[u_]) + __builtin_popcountll(a[v_])) - 2 * cur
        cd = __builtin_popcountll(a[u_] & a[v_])
        new = 0 if uv[t] < p0[s, cd] else 1
        accepted = 1
        if new != cur:
            cand_count = ecount + (new - cur)
            ok = 1
            if cond_mode == 1:
                ok = 1 if (emin <= cand_count <= emax) else 0
            elif cond_mode == 2:
                ok = 1 if table[state ^ (<long long> 1 << e)] else 0
            elif cond_mode == 3:
                ok = 1 if (emin <= cand_count <= emax) else 0
                if ok:
                    bu = (<unsigned long long> 1) << v_
                    bv = (<unsigned long long> 1) << u_
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
                        eidx = pair_index(n, u_, w)
                        cur_bit = <int> ((a[u_] >> w) & 1)
                        okf = gamma_edge_ok(a, u_, w, cur_bit, smin, smax, cdmin, cdmax)
                        delta += (1 - okf) - (1 - flags[eidx])
                        flags[eidx] = <unsigned char> okf
                        eidx = pair_index(n, v_, w)
                        cur_bit = <int> ((a[v_] >> w) & 1)
                        okf = gamma_edge_ok(a, v_, w, cur_bit, smin, smax, cdmin, cdmax)
                        delta += (1 - okf) - (1 - flags[eidx])
                        flags[eidx] = <unsigned char> okf
                    euv_i = pair_index(n, u_, v_)
                    cur_bit = <int> ((a[u_] >> v_) & 1)
                    okf = gamma_edge_ok(a, u_, v_, cur_bit, smin, smax, cdmin, cdmax)
                    delta += (1 - okf) - (1 - flags[euv_i])
                    flags[euv_i] = <unsigned char> okf
                    if viol + delta > 0:
                        if new:
                            a[u_] &= ~bu
                            a[v_] &= ~bv
                        else:
                            a[u_] |= bu
                            a[v_] |= bv
                        for w in range(n):
                            if w == u_ or w == v_:
                                continue
                            eidx = pair_index(n, u_, w)
                            cur_bit = <int> ((a[u_] >> w) & 1)
                            flags[eidx] = <unsigned char> gamma_edge_ok(
                                a, u_, w, cur_bit, smin, smax, cdmin, cdmax)
                            eidx = pair_index(n, v_, w)
                            cur_bit = <int> ((a[v_] >> w) & 1)
                            flags[eidx] = <unsigned char> gamma_edge_ok(
                                a, v_, w, cur_bit, smin, smax, cdmin, cdmax)
                        cur_bit = <int> ((a[u_] >> v_) & 1)
                        flags[euv_i] = <unsigned char> gamma_edge_ok(
                            a, u_, v_, cur_bit, smin, smax, cdmin, cdmax)
                        ok = 0
                    else:
                        viol += delta
                        ecount = cand_count
                        ok = -1  # already applied
            if ok == 1:
                bu = (<unsigned long long> 1) << v_
                bv = (<unsigned long long> 1) << u_
                if new:
                    a[u_] |= bu
                    a[v_] |= bv
                else:
                    a[u_] &= ~bu
                    a[v_] &= ~bv
                ecount = cand_count
                if track_state:
                    state ^= (<long long> 1) << e
            elif ok == 0:
                accepted = 0
                rej += 1
        ecv[t] = ecount
        if logging:
            lev[t] = e
            lav[t] = <unsigned char> accepted
        if snap_every > 0 and (offset + t + 1) % snap_every == 0:
            if cursor < snv.shape[0]:
                for w in range(n):
                    snv[cursor, w] = a[w]
                cursor += 1

    cv[0] = ecount
    cv[1] = rej
    cv[2] = viol
    cv[3] = cursor
    cv[4] = state
    cv[5] = offset + iv.shape[0]


def local_fkg_min(logw, near, support, long long nbits):
    """Minimum FKG log-ratio over near-ordered in-support pairs.

    Matches the python backend: unordered pairs are visited once with
    ``y >= x`` in packed-integer order, so the reported witness and pair
    count agree across backends.
    """
    cdef double[::1] lw_v
    cdef unsigned char[::1] nearv
    cdef Py_ssize_t n_states = (<Py_ssize_t> 1) << nbits
    support_b = np.asarray(support, dtype=bool)
    near_b = np.asarray(near, dtype=bool) & support_b
    lw = np.where(support_b, np.asarray(logw, dtype=np.float64), -np.inf)
    lw_v = np.ascontiguousarray(lw)
    nearv = np.ascontiguousarray(near_b.view(np.uint8))
    near_idx = np.nonzero(near_b)[0].astype(np.int64)
    cdef long long[::1] niv = near_idx
    cdef Py_ssize_t a, b, xi, yi
    cdef unsigned long long x, y, meet, joinv
    cdef long long pairs = 0
    cdef double best = np.inf, ratio
    cdef long long wx = -1, wy = -1
    cdef int bcnt, ccnt

    for a in range(niv.shape[0]):
        x = <unsigned long long> niv[a]
        for b in range(a, niv.shape[0]):
            y = <unsigned long long> niv[b]
            bcnt = __builtin_popcountll(x & ~y)
            ccnt = __builtin_popcountll(y & ~x)
            if bcnt > 1 and ccnt > 1:
                continue
            pairs += 1
            meet = x & y
            joinv = x | y
            ratio = lw_v[meet] + lw_v[joinv] - lw_v[x] - lw_v[y]
            if ratio < best:
                best = ratio
                wx = <long long> x
                wy = <long long> y
    return float(best), int(wx), int(wy), int(pairs)
