"""Greedy equivalence search over CPDAGs with a Gaussian BIC score."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import chain, combinations
from typing import Optional, Sequence

import numpy as np

from .graphs import Cpdag, pdag_to_dag, v_structure_cpdag

_EPS = 1e-12


class BicScore:
    """Local score ``-(n/2) ln(RSS/n) - (|PA|+1)/2 ln n`` from the covariance matrix."""

    def __init__(self, data: np.ndarray):
        data = np.asarray(data, dtype=float)
        self.n = data.shape[0]
        centered = data - data.mean(axis=0)
        self.cov = centered.T @ centered / self.n
        self._cache: dict[tuple[int, frozenset], float] = {}

    def local(self, v: int, parents: frozenset) -> float:
        key = (v, parents)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        pa = sorted(parents)
        var = self.cov[v, v]
        if pa:
            S = self.cov[np.ix_(pa, pa)]
            s = self.cov[pa, v]
            beta = np.linalg.lstsq(S, s, rcond=None)[0]
            var = var - s @ beta
        rss_n = max(float(var), _EPS)
        out = -0.5 * self.n * math.log(rss_n) - 0.5 * (len(pa) + 1) * math.log(self.n)
        self._cache[key] = out
        return out

    def total(self, D: np.ndarray) -> float:
        return sum(self.local(v, frozenset(np.flatnonzero(D[:, v]).tolist())) for v in range(len(D)))


def _subsets(items: Sequence[int]):
    return chain.from_iterable(combinations(items, r) for r in range(len(items) + 1))


def _is_clique(A: np.ndarray, nodes) -> bool:
    nodes = list(nodes)
    for a, b in combinations(nodes, 2):
        if not (A[a, b] or A[b, a]):
            return False
    return True


def _semi_directed_path_blocked(succ: Sequence[Sequence[int]], src: int, dst: int, blocked: set) -> bool:
    """True when every semi-directed path ``src ~> dst`` passes through ``blocked``.

    ``succ[u]`` lists the ``v`` with ``u -> v`` or ``u -- v``.
    """
    stack, seen = [src], {src}
    while stack:
        u = stack.pop()
        for v in succ[u]:
            if v == dst:
                return False
            if v in seen or v in blocked:
                continue
            seen.add(v)
            stack.append(v)
    return True


def _neighbors(A, y):
    return {int(k) for k in np.flatnonzero(A[y] & A[:, y])}


def _parents(A, y):
    return {int(k) for k in np.flatnonzero(A[:, y] & ~A[y])}


def _adj(A, x):
    return {int(k) for k in np.flatnonzero(A[x] | A[:, x])}


@dataclass
class GesResult:
    cpdag: Cpdag
    forward_trace: list[float] = field(default_factory=list)
    backward_trace: list[float] = field(default_factory=list)


def _recompute(A: np.ndarray) -> np.ndarray:
    D = pdag_to_dag(A)
    if D is None:  # operators are chosen to be valid, so this would be a bug
        raise RuntimeError("operator produced a PDAG without consistent extension")
    return v_structure_cpdag(D).astype(bool)


def _best_insert(A: np.ndarray, score: BicScore):
    p = len(A)
    succ = [np.flatnonzero(A[u]).tolist() for u in range(p)]
    adj = [_adj(A, v) for v in range(p)]
    nbrs = [_neighbors(A, v) for v in range(p)]
    pars = [_parents(A, v) for v in range(p)]
    best = None
    for x in range(p):
        adj_x = adj[x]
        for y in range(p):
            if x == y or y in adj_x:
                continue
            ne_y = nbrs[y]
            na = ne_y & adj_x
            pa_y = pars[y]
            t0 = sorted(ne_y - adj_x)
            for T in _subsets(t0):
                cond = na | set(T)
                if not _is_clique(A, cond):
                    continue
                if not _semi_directed_path_blocked(succ, y, x, cond):
                    continue
                base = frozenset(cond | pa_y)
                delta = score.local(y, base | {x}) - score.local(y, base)
                if best is None or delta > best[0]:
                    best = (delta, x, y, T)
    return best


def _best_delete(A: np.ndarray, score: BicScore):
    p = len(A)
    best = None
    for x in range(p):
        for y in range(p):
            if x == y or not A[x, y]:
                continue
            # x -> y or x -- y; undirected pairs are visited from both ends
            na = sorted(_neighbors(A, y) & _adj(A, x))
            pa_y = _parents(A, y)
            for H in _subsets(na):
                rest = set(na) - set(H)
                if not _is_clique(A, rest):
                    continue
                base = frozenset((rest | pa_y) - {x})
                delta = score.local(y, base) - score.local(y, base | {x})
                if best is None or delta > best[0]:
                    best = (delta, x, y, H)
    return best


def ges_search(data: np.ndarray, variables: Optional[Sequence[str]] = None,
               max_steps: int = 10_000) -> GesResult:
    data = np.asarray(data, dtype=float)
    p = data.shape[1]
    variables = tuple(variables) if variables is not None else tuple(f"x{i}" for i in range(p))
    score = BicScore(data)
    A = np.zeros((p, p), dtype=bool)
    fwd = [score.total(A)]
    for _ in range(max_steps):
        best = _best_insert(A, score)
        if best is None or best[0] <= 0:
            break
        _, x, y, T = best
        A[x, y] = True
        for t in T:
            A[y, t] = False
        A = _recompute(A)
        fwd.append(score.total(pdag_to_dag(A)))
    bwd = [fwd[-1]]
    for _ in range(max_steps):
        best = _best_delete(A, score)
        if best is None or best[0] <= 0:
            break
        _, x, y, H = best
        A[x, y] = A[y, x] = False
        for h in H:
            A[h, y] = False
            if A[x, h] and A[h, x]:
                A[h, x] = False
        A = _recompute(A)
        bwd.append(score.total(pdag_to_dag(A)))
    return GesResult(Cpdag.from_matrix(A.astype(np.int8), variables), fwd, bwd)


def ges(data: np.ndarray, variables: Optional[Sequence[str]] = None) -> Cpdag:
    return ges_search(data, variables).cpdag
