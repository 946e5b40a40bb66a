"""Agreement-weighted merge of several structure-learning outputs."""
from __future__ import annotations

from collections import Counter
from itertools import combinations
from typing import Sequence

from .graphs import Cpdag, EnsembleGraph


def ensemble_merge(graphs: Sequence[Cpdag], year: int | None = None, n_algorithms: int | None = None) -> EnsembleGraph:
    """Weight each adjacency by the share of graphs containing it.

    Orientation is the strict majority among graphs that direct the edge;
    otherwise the edge is undirected. Undirected-only inputs (such as an
    MMPC skeleton) count toward adjacency but never toward direction.
    """
    if not graphs:
        raise ValueError("need at least one graph")
    variables = graphs[0].variables
    for g in graphs[1:]:
        if set(g.variables) != set(variables):
            raise ValueError("graphs are over different variable sets")
    total = n_algorithms or len(graphs)
    edges = {}
    for a, b in combinations(sorted(variables), 2):
        count = 0
        votes: Counter = Counter()
        for g in graphs:
            o = g.orientation(a, b)
            if o is None:
                continue
            count += 1
            if o in ("->", "<-"):
                votes[o] += 1
        if count == 0:
            continue
        n_dir = sum(votes.values())
        orientation = "--"
        for o, c in votes.items():
            if 2 * c > n_dir:
                orientation = o
        edges[(a, b)] = (count / total, orientation)
    return EnsembleGraph(tuple(variables), edges, year)
