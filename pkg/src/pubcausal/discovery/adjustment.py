"""Back-door adjustment over the parents of the intervened variable."""
from __future__ import annotations

from collections import Counter
from typing import Mapping, Sequence

import numpy as np

from .graphs import Cpdag, EnsembleGraph

MAX_LEVELS = 8


def _parents(graph, x: str) -> list[str]:
    if isinstance(graph, Cpdag):
        return graph.parents(x)
    if isinstance(graph, EnsembleGraph):
        return sorted(v for v in graph.variables if v != x and graph.orientation(v, x) == "->")
    return sorted(graph.get(x, ()))  # plain mapping child -> parents


def do_effect(graph, data: Mapping[str, Sequence], x: str, x_val, y: str, y_val) -> float:
    """``P(Y = y_val | do(X = x_val))`` by adjusting for the parents of ``x``.

    Strata with no unit at ``X = x_val`` fall back to ``P(Y = y_val | PA = z)``.
    """
    for name in (x, y):
        if name not in data:
            raise KeyError(f"column {name!r} not in data")
    pa = [v for v in _parents(graph, x) if v != y]
    for v in [x, y, *pa]:
        if v not in data:
            raise KeyError(f"parent column {v!r} not in data")
        if len(set(np.asarray(data[v]).tolist())) > MAX_LEVELS:
            raise ValueError(f"column {v!r} has more than {MAX_LEVELS} levels")
    xs = list(np.asarray(data[x]).tolist())
    ys = list(np.asarray(data[y]).tolist())
    n = len(xs)
    if n == 0:
        raise ValueError("empty data")
    zs = list(zip(*(np.asarray(data[v]).tolist() for v in pa))) if pa else [()] * n
    strata = Counter(zs)
    total = 0.0
    for z, nz in sorted(strata.items()):
        rows = [i for i in range(n) if zs[i] == z]
        hit = [i for i in rows if xs[i] == x_val]
        pool = hit if hit else rows
        cond = sum(1 for i in pool if ys[i] == y_val) / len(pool)
        total += cond * nz / n
    return total
