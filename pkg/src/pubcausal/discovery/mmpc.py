"""Max-min parents and children with an AND-symmetrized skeleton."""
from __future__ import annotations

import math
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .citest import FisherZ
from .graphs import Cpdag


def _min_assoc(tester: FisherZ, target: int, v: int, cpc: list[int], max_cond: int) -> tuple[float, bool]:
    """Minimum association of ``v`` with ``target`` over subsets of ``cpc``.

    Association is ``-log p``. The second element reports whether some
    subset made the pair independent.
    """
    best = math.inf
    for r in range(min(len(cpc), max_cond) + 1):
        for S in combinations(cpc, r):
            if tester.n <= len(S) + 3:
                continue
            res = tester.test(target, v, S)
            if res.independent:
                return -tester.log_p(res), True
            best = min(best, -tester.log_p(res))
    return best, False


def mmpc_target(tester: FisherZ, target: int, p: int, max_cond: int = 3) -> set[int]:
    cpc: list[int] = []
    remaining = [v for v in range(p) if v != target]
    while remaining:
        scored = []
        dropped = []
        for v in remaining:
            assoc, indep = _min_assoc(tester, target, v, cpc, max_cond)
            if indep:
                dropped.append(v)
            else:
                scored.append((assoc, -v))
        remaining = [v for v in remaining if v not in dropped]
        if not scored:
            break
        _, neg_v = max(scored)
        cpc.append(-neg_v)
        remaining.remove(-neg_v)
    # shrink phase
    for v in list(cpc):
        others = [u for u in cpc if u != v]
        _, indep = _min_assoc(tester, target, v, others, max_cond)
        if indep:
            cpc.remove(v)
    return set(cpc)


def mmpc_adjacencies(data: np.ndarray, alpha: float = 0.01, max_cond: int = 3,
                     tester: Optional[FisherZ] = None) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    p = data.shape[1]
    tester = tester or FisherZ(data, alpha)
    pcs = [mmpc_target(tester, t, p, max_cond) for t in range(p)]
    adj = np.zeros((p, p), dtype=bool)
    for a in range(p):
        for b in pcs[a]:
            if a in pcs[b]:
                adj[a, b] = adj[b, a] = True
    return adj


def mmpc(data: np.ndarray, alpha: float = 0.01, variables: Optional[Sequence[str]] = None,
         max_cond: int = 3, tester: Optional[FisherZ] = None) -> set[frozenset[str]]:
    """Undirected adjacencies as a set of name pairs."""
    data = np.asarray(data, dtype=float)
    p = data.shape[1]
    variables = tuple(variables) if variables is not None else tuple(f"x{i}" for i in range(p))
    if p < 2:
        return set()
    adj = mmpc_adjacencies(data, alpha, max_cond, tester)
    return {frozenset((variables[a], variables[b])) for a, b in zip(*np.nonzero(np.triu(adj)))}


def mmpc_cpdag(data: np.ndarray, alpha: float = 0.01, variables: Optional[Sequence[str]] = None,
               max_cond: int = 3, tester: Optional[FisherZ] = None) -> Cpdag:
    """MMPC skeleton wrapped as an all-undirected graph for the ensemble."""
    p = np.asarray(data).shape[1]
    variables = tuple(variables) if variables is not None else tuple(f"x{i}" for i in range(p))
    return Cpdag(variables, frozenset(), frozenset(mmpc(data, alpha, variables, max_cond, tester)))
