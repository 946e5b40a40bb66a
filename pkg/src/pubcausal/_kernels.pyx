# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: honest causal tree growth, greedy matching, MCP descent."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

LEAF = -1


cdef void _partition(long[:, ::1] order, double[:, ::1] X, Py_ssize_t start, Py_ssize_t end,
                     Py_ssize_t f, double thr, long[::1] buf, Py_ssize_t *mid):
    """Stable partition of every feature row segment by ``X[:, f] <= thr``."""
    cdef Py_ssize_t g, k, nl, nr, p = order.shape[0]
    cdef long i
    for g in range(p):
        nl = 0
        nr = 0
        for k in range(start, end):
            i = order[g, k]
            if X[i, f] <= thr:
                order[g, start + nl] = i
                nl += 1
            else:
                buf[nr] = i
                nr += 1
        for k in range(nr):
            order[g, start + nl + k] = buf[k]
        mid[0] = start + nl


def grow_tree(X, t, y, s_idx, e_idx, Py_ssize_t min_leaf=5, Py_ssize_t max_depth=64):
    """Honest causal tree.

    Structure comes from ``s_idx``, leaf values from ``e_idx``. Returns
    ``(feature, threshold, left, right, value)`` arrays, or ``None`` when the
    root cannot hold both arms in both halves.
    """
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef signed char[::1] tv = np.ascontiguousarray(t, dtype=np.int8)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    s_idx = np.asarray(s_idx, dtype=np.int64)
    e_idx = np.asarray(e_idx, dtype=np.int64)
    for idx in (s_idx, e_idx):
        arms = np.asarray(tv)[idx]
        if not (arms == 1).any() or not (arms == 0).any():
            return None

    cdef Py_ssize_t p = Xv.shape[1], ns = len(s_idx), ne = len(e_idx)
    cdef Py_ssize_t f, k
    Xa = np.asarray(Xv)
    so = np.empty((p, ns), dtype=np.int64)
    eo = np.empty((p, ne), dtype=np.int64)
    for f in range(p):
        so[f] = s_idx[np.argsort(Xa[s_idx, f], kind="stable")]
        eo[f] = e_idx[np.argsort(Xa[e_idx, f], kind="stable")]
    cdef long[:, ::1] sov = so
    cdef long[:, ::1] eov = eo
    cdef long[::1] sbuf = np.empty(max(ns, 1), dtype=np.int64)
    cdef long[::1] ebuf = np.empty(max(ne, 1), dtype=np.int64)

    feature, threshold, left, right, value = [], [], [], [], []
    # node: (id, s_start, s_end, e_start, e_end, depth)
    feature.append(LEAF); threshold.append(0.0); left.append(LEAF); right.append(LEAF); value.append(0.0)
    stack = [(0, 0, ns, 0, ne, 0)]

    cdef Py_ssize_t node, s0, s1, e0, e1, depth, n, nl, nr, n1_l, n0_l, n1_r, n0_r, n1_tot
    cdef Py_ssize_t ep, e1_l, e0_l, e1_tot, e0_tot, best_f, smid, emid
    cdef double y1_l, y0_l, y1_tot, y0_tot, x_here, x_next, thr, tau_l, tau_r, d, gain
    cdef double best_gain, best_thr, sum1, sum0
    cdef long i
    while stack:
        node, s0, s1, e0, e1, depth = stack.pop()
        n = s1 - s0
        best_f = -1
        best_gain = -1.0
        best_thr = 0.0
        if depth < max_depth and n >= 2 * min_leaf:
            e1_tot = 0
            e0_tot = 0
            for k in range(e0, e1):
                if tv[eov[0, k]] == 1:
                    e1_tot += 1
                else:
                    e0_tot += 1
            for f in range(p):
                # arm totals summed in this feature's order, as the fallback does
                n1_tot = 0
                y1_tot = 0.0
                y0_tot = 0.0
                for k in range(s0, s1):
                    i = sov[f, k]
                    if tv[i] == 1:
                        n1_tot += 1
                        y1_tot += yv[i]
                    else:
                        y0_tot += yv[i]
                n1_l = 0
                y1_l = 0.0
                y0_l = 0.0
                ep = e0
                e1_l = 0
                e0_l = 0
                for k in range(s0, s1 - 1):
                    i = sov[f, k]
                    if tv[i] == 1:
                        n1_l += 1
                        y1_l += yv[i]
                    else:
                        y0_l += yv[i]
                    x_here = Xv[i, f]
                    x_next = Xv[sov[f, k + 1], f]
                    if not (x_here < x_next):
                        continue
                    nl = k - s0 + 1
                    nr = n - nl
                    n0_l = nl - n1_l
                    n1_r = n1_tot - n1_l
                    n0_r = nr - n1_r
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    if n1_l == 0 or n0_l == 0 or n1_r == 0 or n0_r == 0:
                        continue
                    thr = (x_here + x_next) / 2.0
                    while ep < e1 and Xv[eov[f, ep], f] <= thr:
                        if tv[eov[f, ep]] == 1:
                            e1_l += 1
                        else:
                            e0_l += 1
                        ep += 1
                    if e1_l == 0 or e0_l == 0 or e1_l == e1_tot or e0_l == e0_tot:
                        continue
                    tau_l = y1_l / n1_l - y0_l / n0_l
                    tau_r = (y1_tot - y1_l) / n1_r - (y0_tot - y0_l) / n0_r
                    d = tau_l - tau_r
                    gain = (nl * nr) / <double>(n * n) * (d * d)
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        best_thr = thr
        if best_f < 0:
            sum1 = 0.0
            sum0 = 0.0
            e1_l = 0
            e0_l = 0
            for k in range(e0, e1):
                i = eov[0, k]
                if tv[i] == 1:
                    sum1 += yv[i]
                    e1_l += 1
                else:
                    sum0 += yv[i]
                    e0_l += 1
            value[node] = sum1 / e1_l - sum0 / e0_l
            continue
        feature[node] = best_f
        threshold[node] = best_thr
        _partition(sov, Xv, s0, s1, best_f, best_thr, sbuf, &smid)
        _partition(eov, Xv, e0, e1, best_f, best_thr, ebuf, &emid)
        ln = len(feature)
        for _ in range(2):
            feature.append(LEAF); threshold.append(0.0); left.append(LEAF); right.append(LEAF); value.append(0.0)
        left[node] = ln
        right[node] = ln + 1
        stack.append((ln + 1, smid, s1, emid, e1, depth + 1))
        stack.append((ln, s0, smid, e0, emid, depth + 1))
    return (np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
            np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
            np.array(value, dtype=np.float64))


cdef Py_ssize_t _find(long[::1] parent, Py_ssize_t i):
    cdef Py_ssize_t root = i, nxt
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


def greedy_match(treated, controls, double caliper):
    """Greedy nearest-neighbour matching without replacement.

    Treated units are taken in the given order. Each gets the closest unused
    control (the lower value on exact ties) if within ``caliper``. Returns
    the matched control index per treated unit, ``-1`` when unmatched.
    """
    cdef double[::1] tv = np.ascontiguousarray(treated, dtype=np.float64)
    controls = np.ascontiguousarray(controls, dtype=np.float64)
    cdef Py_ssize_t m = len(controls), nt = tv.shape[0], i, pos, l, r, best
    order_arr = np.argsort(controls, kind="stable").astype(np.int64)
    cdef long[::1] order = order_arr
    vals_arr = controls[order_arr]
    cdef double[::1] vals = vals_arr
    cdef long[::1] nxt = np.arange(m + 1, dtype=np.int64)
    cdef long[::1] prv = np.arange(m + 1, dtype=np.int64)
    out_arr = np.full(nt, -1, dtype=np.int64)
    cdef long[::1] out = out_arr
    cdef double v
    positions = np.searchsorted(vals_arr, np.asarray(tv), side="left").astype(np.int64)
    cdef long[::1] posv = positions
    for i in range(nt):
        v = tv[i]
        pos = posv[i]
        r = _find(nxt, pos)
        l = _find(prv, pos) - 1
        best = -1
        if l >= 0 and r < m:
            best = l if v - vals[l] <= vals[r] - v else r
        elif l >= 0:
            best = l
        elif r < m:
            best = r
        if best < 0 or fabs(v - vals[best]) > caliper:
            continue
        out[i] = order[best]
        nxt[best] = best + 1
        prv[best + 1] = best
    return out_arr


cdef bint _creates_cycle(double[:, ::1] B, Py_ssize_t j, Py_ssize_t v,
                         unsigned char[::1] seen, long[::1] stack):
    cdef Py_ssize_t p = B.shape[0], top = 0, u, w
    for w in range(p):
        seen[w] = 0
    stack[0] = v
    top = 1
    seen[v] = 1
    while top > 0:
        top -= 1
        u = stack[top]
        if u == j:
            return True
        for w in range(p):
            if B[u, w] != 0.0 and not seen[w]:
                seen[w] = 1
                stack[top] = w
                top += 1
    return False


def ccdr_cd(S, double lam, double gamma=2.0, Py_ssize_t max_sweeps=500, double tol=1e-6, B=None):
    """MCP coordinate descent on a Gram matrix with cycle rejection.

    ``B[j, v]`` is the coefficient of edge ``j -> v``. Returns
    ``(B, converged, sweeps)``.
    """
    cdef double[:, ::1] Sv = np.ascontiguousarray(S, dtype=np.float64)
    cdef Py_ssize_t p = Sv.shape[0], sweep, v, j, k
    B_arr = np.zeros((p, p)) if B is None else np.array(B, dtype=np.float64, order="C")
    cdef double[:, ::1] Bv = B_arr
    cdef unsigned char[::1] seen = np.zeros(p, dtype=np.uint8)
    cdef long[::1] stack = np.zeros(p + 1, dtype=np.int64)
    cdef double delta, a, z, soft, denom, b, old, change
    for sweep in range(1, max_sweeps + 1):
        delta = 0.0
        for v in range(p):
            for j in range(p):
                if j == v:
                    continue
                a = Sv[j, j]
                if a <= 0.0:
                    continue
                z = Sv[j, v]
                for k in range(p):
                    if k != j:
                        z -= Sv[j, k] * Bv[k, v]
                if fabs(z) <= gamma * lam * a:
                    soft = fabs(z) - lam
                    denom = a - 1.0 / gamma
                    if denom <= 0.0:
                        denom = a
                    if soft <= 0.0:
                        b = 0.0
                    else:
                        b = (soft if z > 0 else -soft) / denom
                else:
                    b = z / a
                old = Bv[j, v]
                if b != 0.0 and old == 0.0 and _creates_cycle(Bv, j, v, seen, stack):
                    b = 0.0
                change = fabs(b - old)
                if change > delta:
                    delta = change
                Bv[j, v] = b
        if delta < tol:
            return B_arr, True, sweep
    return B_arr, False, max_sweeps
