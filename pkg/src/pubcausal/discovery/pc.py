"""Order-independent (stable) PC with Fisher-z tests."""
from __future__ import annotations

from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .citest import FisherZ
from .graphs import Cpdag, apply_meek_rules, directed_matrix, has_directed_path


def pc_skeleton(tester: FisherZ, p: int, max_cond: int = 3) -> tuple[np.ndarray, dict]:
    """Level-wise skeleton search; returns the adjacency and separating sets.

    Conditioning sets at each level come from a snapshot of the adjacency
    taken before the level starts, which makes the result independent of the
    column order.
    """
    adj = ~np.eye(p, dtype=bool)
    sepsets: dict[frozenset, tuple[int, ...]] = {}
    level = 0
    while level <= max_cond:
        snapshot = adj.copy()
        if not any(snapshot[i].sum() - 1 >= level for i in range(p)):
            break
        removed = []
        for i in range(p):
            for j in range(i + 1, p):
                if not adj[i, j]:
                    continue
                found = None
                for a, b in ((i, j), (j, i)):
                    cands = [k for k in np.flatnonzero(snapshot[a]) if k != b]
                    if len(cands) < level:
                        continue
                    for S in combinations(cands, level):
                        if tester.n <= len(S) + 3:
                            break
                        if tester.test(a, b, S).independent:
                            found = S
                            break
                    if found is not None:
                        break
                if found is not None:
                    removed.append((i, j, found))
        for i, j, S in removed:
            adj[i, j] = adj[j, i] = False
            sepsets[frozenset((i, j))] = tuple(sorted(int(s) for s in S))
        level += 1
    return adj, sepsets


def orient_v_structures(adj: np.ndarray, sepsets: dict) -> np.ndarray:
    """Orient unshielded colliders in sorted (i, k, j) order.

    A collider is skipped when either arm is already oriented the other way
    or when orienting it would close a directed cycle.
    """
    A = adj.astype(bool).copy()
    p = len(A)
    for k in range(p):
        nbrs = np.flatnonzero(adj[k])
        for i, j in combinations(nbrs, 2):
            if adj[i, j]:
                continue
            if k in sepsets.get(frozenset((int(i), int(j))), ()):
                continue
            # conflict: an arm already points away from k
            if (A[k, i] and not A[i, k]) or (A[k, j] and not A[j, k]):
                continue
            trial = A.copy()
            trial[k, i] = trial[k, j] = False
            D = directed_matrix(trial).astype(bool)
            if has_directed_path(D, k, int(i)) or has_directed_path(D, k, int(j)):
                continue
            A = trial
    return A


def pc(data: np.ndarray, alpha: float = 0.01, variables: Optional[Sequence[str]] = None,
       max_cond: int = 3, tester: Optional[FisherZ] = None) -> Cpdag:
    data = np.asarray(data, dtype=float)
    p = data.shape[1]
    variables = tuple(variables) if variables is not None else tuple(f"x{i}" for i in range(p))
    if p < 2:
        return Cpdag(variables)
    tester = tester or FisherZ(data, alpha)
    adj, sepsets = pc_skeleton(tester, p, max_cond)
    A = orient_v_structures(adj, sepsets)
    A = apply_meek_rules(A)
    flags = ("low_rank",) if tester.low_rank_seen else ()
    return Cpdag.from_matrix(A, variables, flags)
