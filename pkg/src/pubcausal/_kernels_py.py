"""Pure numpy/Python versions of the hot loops.

Semantics match the compiled module exactly; the parity tests compare the
two on random inputs.
"""
from __future__ import annotations

import numpy as np

LEAF = -1


def _best_split(X, t, y, s_idx, e_idx, min_leaf):
    n = len(s_idx)
    best_gain, best_f, best_thr = -1.0, -1, 0.0
    for f in range(X.shape[1]):
        order = s_idx[np.argsort(X[s_idx, f], kind="stable")]
        xs = X[order, f]
        ts = t[order].astype(np.int64)
        ys = y[order]
        n1_l = np.cumsum(ts)[:-1]
        n_l = np.arange(1, n, dtype=np.int64)
        n0_l = n_l - n1_l
        y1_l = np.cumsum(ys * ts)[:-1]
        y0_l = np.cumsum(ys * (1 - ts))[:-1]
        n1_tot, y1_tot = n1_l[-1] + ts[-1], y1_l[-1] + ys[-1] * ts[-1]
        y0_tot = y0_l[-1] + ys[-1] * (1 - ts[-1])
        n_r = n - n_l
        n1_r = n1_tot - n1_l
        n0_r = n_r - n1_r
        ok = (xs[:-1] < xs[1:]) & (n_l >= min_leaf) & (n_r >= min_leaf)
        ok &= (n1_l > 0) & (n0_l > 0) & (n1_r > 0) & (n0_r > 0)
        if not ok.any():
            continue
        thr = (xs[:-1] + xs[1:]) / 2.0
        # estimation half must keep both arms on both sides
        ex = X[e_idx, f]
        et = t[e_idx]
        e1 = np.sort(ex[et == 1])
        e0 = np.sort(ex[et == 0])
        e1_l = np.searchsorted(e1, thr, side="right")
        e0_l = np.searchsorted(e0, thr, side="right")
        ok &= (e1_l > 0) & (e0_l > 0) & (e1_l < len(e1)) & (e0_l < len(e0))
        if not ok.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            tau_l = y1_l / n1_l - y0_l / n0_l
            tau_r = (y1_tot - y1_l) / n1_r - (y0_tot - y0_l) / n0_r
            d = tau_l - tau_r
            gain = (n_l * n_r) / float(n * n) * (d * d)
        gain = np.where(ok, gain, -1.0)
        k = int(np.argmax(gain))
        if gain[k] > best_gain:
            best_gain, best_f, best_thr = float(gain[k]), f, float(thr[k])
    return best_f, best_thr


def _leaf_value(X, t, y, e_idx):
    # sequential sums in first-feature order, matching the compiled scan
    e = e_idx[np.argsort(X[e_idx, 0], kind="stable")]
    m1 = t[e] == 1
    s1 = np.cumsum(y[e][m1])[-1]
    s0 = np.cumsum(y[e][~m1])[-1]
    return s1 / m1.sum() - s0 / (~m1).sum()


def grow_tree(X, t, y, s_idx, e_idx, min_leaf=5, max_depth=64):
    """Honest causal tree.

    Structure comes from ``s_idx``, leaf values from ``e_idx``. Returns
    ``(feature, threshold, left, right, value)`` arrays, or ``None`` when the
    root cannot hold both arms in both halves.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    t = np.ascontiguousarray(t, dtype=np.int8)
    y = np.ascontiguousarray(y, dtype=np.float64)
    s_idx = np.asarray(s_idx, dtype=np.int64)
    e_idx = np.asarray(e_idx, dtype=np.int64)
    for idx in (s_idx, e_idx):
        arms = t[idx]
        if not (arms == 1).any() or not (arms == 0).any():
            return None
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, s_idx, e_idx, 0)]
    while stack:
        node, s, e, depth = stack.pop()
        f = -1
        if depth < max_depth and len(s) >= 2 * min_leaf:
            f, thr = _best_split(X, t, y, s, e, min_leaf)
        if f < 0:
            value[node] = _leaf_value(X, t, y, e)
            continue
        feature[node], threshold[node] = f, thr
        ln, rn = new_node(), new_node()
        left[node], right[node] = ln, rn
        sm = X[s, f] <= thr
        em = X[e, f] <= thr
        # right pushed first so the left subtree is numbered first on pop
        stack.append((rn, s[~sm], e[~em], depth + 1))
        stack.append((ln, s[sm], e[em], depth + 1))
    return (np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
            np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
            np.array(value, dtype=np.float64))


def predict_tree(tree, X):
    """Leaf values for each row, descending all rows one level at a time."""
    feature, threshold, left, right, value = tree
    X = np.asarray(X, dtype=np.float64)
    node = np.zeros(len(X), dtype=np.int64)
    rows = np.arange(len(X))
    active = feature[node] != LEAF
    while active.any():
        r = rows[active]
        nd = node[r]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        active[r] = feature[node[r]] != LEAF
    return value[node]


def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        parent[i], i = root, parent[i]
    return root


def greedy_match(treated, controls, caliper):
    """Greedy nearest-neighbour matching without replacement.

    Treated units are taken in the given order. Each gets the closest unused
    control (the lower value on exact ties) if within ``caliper``. Returns
    the matched control index per treated unit, ``-1`` when unmatched.
    """
    treated = np.asarray(treated, dtype=np.float64)
    controls = np.asarray(controls, dtype=np.float64)
    m = len(controls)
    order = np.argsort(controls, kind="stable")
    vals = controls[order]
    # union-find over positions 0..m (m is a sentinel "none to the right")
    nxt = list(range(m + 1))
    # prv maps position+1 so that 0 is the "none to the left" sentinel
    prv = list(range(m + 1))
    out = np.full(len(treated), -1, dtype=np.int64)
    for i, v in enumerate(treated):
        pos = int(np.searchsorted(vals, v, side="left"))
        r = _find(nxt, pos)
        l = _find(prv, pos) - 1
        best = -1
        if l >= 0 and r < m:
            best = l if v - vals[l] <= vals[r] - v else r
        elif l >= 0:
            best = l
        elif r < m:
            best = r
        if best < 0 or abs(v - vals[best]) > caliper:
            continue
        out[i] = order[best]
        nxt[best] = best + 1
        prv[best + 1] = best
    return out


def _creates_cycle(B, j, v):
    """Would adding ``j -> v`` close a cycle, i.e. is there a path ``v ~> j``?"""
    p = len(B)
    seen = [False] * p
    stack = [v]
    seen[v] = True
    while stack:
        u = stack.pop()
        if u == j:
            return True
        for w in range(p):
            if B[u][w] != 0.0 and not seen[w]:
                seen[w] = True
                stack.append(w)
    return False


def ccdr_cd(S, lam, gamma=2.0, max_sweeps=500, tol=1e-6, B=None):
    """MCP coordinate descent on a Gram matrix with cycle rejection.

    ``B[j][v]`` is the coefficient of edge ``j -> v``. Returns
    ``(B, converged, sweeps)``.
    """
    S = np.ascontiguousarray(S, dtype=np.float64)
    p = S.shape[0]
    B0 = np.zeros((p, p)) if B is None else np.array(B, dtype=np.float64)
    # plain lists are several times faster than numpy scalar indexing here
    S, B = S.tolist(), B0.tolist()
    for sweep in range(1, max_sweeps + 1):
        delta = 0.0
        for v in range(p):
            for j in range(p):
                if j == v:
                    continue
                a = S[j][j]
                if a <= 0.0:
                    continue
                z = S[j][v]
                for k in range(p):
                    if k != j:
                        z -= S[j][k] * B[k][v]
                if abs(z) <= gamma * lam * a:
                    soft = abs(z) - lam
                    denom = a - 1.0 / gamma
                    if denom <= 0.0:
                        denom = a
                    b = 0.0 if soft <= 0.0 else (soft if z > 0 else -soft) / denom
                else:
                    b = z / a
                old = B[j][v]
                if b != 0.0 and old == 0.0 and _creates_cycle(B, j, v):
                    b = 0.0
                change = abs(b - old)
                if change > delta:
                    delta = change
                B[j][v] = b
        if delta < tol:
            return np.array(B), True, sweep
    return np.array(B), False, max_sweeps
