"""Yearly co-authorship graphs and per-author influence/career features."""
from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field, fields
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .corpus import AuthorPaperRow


@dataclass
class YearGraph:
    """Undirected co-authorship graph for one calendar year.

    ``edges`` maps a sorted author pair to the number of papers the pair
    co-authored in that year.
    """

    year: int
    nodes: list[str] = field(default_factory=list)
    edges: dict[tuple[str, str], int] = field(default_factory=dict)

    def neighbors(self) -> dict[str, set[str]]:
        nb: dict[str, set[str]] = {n: set() for n in self.nodes}
        for a, b in self.edges:
            nb[a].add(b)
            nb[b].add(a)
        return nb

    def weight_matrix(self) -> sparse.csr_matrix:
        index = {n: i for i, n in enumerate(self.nodes)}
        n = len(self.nodes)
        if not self.edges:
            return sparse.csr_matrix((n, n))
        rows, cols, vals = [], [], []
        for (a, b), m in self.edges.items():
            i, j = index[a], index[b]
            rows += [i, j]
            cols += [j, i]
            vals += [m, m]
        return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=float)


@dataclass(frozen=True)
class AuthorNetworkStats:
    author_id: str
    year: int
    centrality: float
    pagerank: float
    n_coauthors: int
    avg_papers_per_coauthor: float
    coauthor_likelihood: float
    years_since_first: int
    n_papers_total: int
    n_papers_last_year: int
    n_papers_last_5y: int


NETWORK_COLUMNS = tuple(f.name for f in fields(AuthorNetworkStats))


def _papers_by_id(rows: Iterable[AuthorPaperRow]) -> dict[str, tuple[int, list[str]]]:
    papers: dict[str, tuple[int, list[str]]] = {}
    for r in rows:
        year, authors = papers.setdefault(r.paper_id, (r.year, []))
        authors.append(r.author_id)
    return papers


def build_yearly_graph(rows: Iterable[AuthorPaperRow], year: int) -> YearGraph:
    nodes: set[str] = set()
    edges: dict[tuple[str, str], int] = defaultdict(int)
    for pyear, authors in _papers_by_id(rows).values():
        if pyear != year:
            continue
        uniq = sorted(set(authors))
        nodes.update(uniq)
        for a, b in combinations(uniq, 2):
            edges[(a, b)] += 1
    return YearGraph(year, sorted(nodes), dict(sorted(edges.items())))


def pagerank(graph: YearGraph, damping: float = 0.85, tol: float = 1e-10, max_iter: int = 10_000) -> dict[str, float]:
    """Weighted PageRank by power iteration with uniform teleport.

    Dangling (isolated) nodes spread their mass uniformly, so scores always
    sum to one.
    """
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must lie in (0, 1)")
    n = len(graph.nodes)
    if n == 0:
        return {}
    W = graph.weight_matrix()
    out_weight = np.asarray(W.sum(axis=1)).ravel()
    dangling = out_weight == 0
    inv = np.divide(1.0, out_weight, out=np.zeros(n), where=~dangling)
    P = sparse.diags(inv) @ W  # row-stochastic on non-dangling rows
    PT = P.T.tocsr()
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = damping * (PT @ x + x[dangling].sum() / n) + (1.0 - damping) / n
        nxt /= nxt.sum()
        if np.abs(nxt - x).sum() < tol:
            x = nxt
            break
        x = nxt
    return dict(zip(graph.nodes, x.tolist()))


def degree_centrality(graph: YearGraph) -> dict[str, float]:
    n = len(graph.nodes)
    if n <= 1:
        return {a: 0.0 for a in graph.nodes}
    return {a: len(nb) / (n - 1) for a, nb in graph.neighbors().items()}


class AuthorHistory:
    """Per-author paper index over a row table, for cumulative features."""

    def __init__(self, rows: Sequence[AuthorPaperRow]):
        self.papers = _papers_by_id(rows)
        self.by_author: dict[str, list[str]] = defaultdict(list)
        for pid, (_, authors) in self.papers.items():
            for a in set(authors):
                self.by_author[a].append(pid)

    def years(self, author_id: str) -> list[int]:
        return sorted(self.papers[p][0] for p in self.by_author.get(author_id, ()))

    def coauthor_diversity(self, author_id: str, year: int) -> tuple[int, float, float]:
        shared: dict[str, int] = defaultdict(int)
        n_total = 0
        for pid in self.by_author.get(author_id, ()):
            pyear, authors = self.papers[pid]
            if pyear > year:
                continue
            n_total += 1
            for co in set(authors) - {author_id}:
                shared[co] += 1
        if not shared:
            return 0, 0.0, 0.0
        avg = sum(shared.values()) / len(shared)
        return len(shared), avg, avg / n_total

    def career(self, author_id: str, year: int) -> tuple[int, int, int, int]:
        years = [y for y in self.years(author_id) if y <= year]
        if not years:
            raise KeyError(f"author {author_id!r} has no papers at or before {year}")
        return (
            year - years[0],
            len(years),
            sum(1 for y in years if y == year - 1),
            sum(1 for y in years if year - 5 <= y <= year - 1),
        )


def coauthor_diversity_features(rows: Sequence[AuthorPaperRow], author_id: str, year: int) -> tuple[int, float, float]:
    """``(n_coauthors, avg_papers_per_coauthor, coauthor_likelihood)`` through ``year``."""
    return AuthorHistory(rows).coauthor_diversity(author_id, year)


def author_career_features(rows: Sequence[AuthorPaperRow], author_id: str, year: int) -> tuple[int, int, int, int]:
    """``(years_since_first, n_total, n_last_year, n_last_5y)``.

    The last-year and last-five-year windows end at ``year - 1``.
    """
    return AuthorHistory(rows).career(author_id, year)


def network_features(
    rows: Sequence[AuthorPaperRow],
    years: Iterable[int] | None = None,
    damping: float = 0.85,
) -> list[AuthorNetworkStats]:
    """Stats for every author publishing in each requested year."""
    history = AuthorHistory(rows)
    all_years = sorted({r.year for r in rows})
    years = all_years if years is None else sorted(set(years) & set(all_years))
    out = []
    for y in years:
        g = build_yearly_graph(rows, y)
        pr = pagerank(g, damping)
        dc = degree_centrality(g)
        for a in g.nodes:
            nco, avg, lik = history.coauthor_diversity(a, y)
            since, tot, last, last5 = history.career(a, y)
            out.append(AuthorNetworkStats(a, y, dc[a], pr[a], nco, avg, lik, since, tot, last, last5))
    return out


def write_network_csv(stats: Iterable[AuthorNetworkStats], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(NETWORK_COLUMNS)
        for s in stats:
            w.writerow([repr(v) if isinstance(v, float) else v for v in (getattr(s, c) for c in NETWORK_COLUMNS)])


def read_network_csv(path: Path) -> dict[tuple[str, int], AuthorNetworkStats]:
    kinds = {f.name: f.type for f in fields(AuthorNetworkStats)}
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for d in csv.DictReader(fh):
            vals = {}
            for k, v in d.items():
                t = kinds[k]
                vals[k] = int(v) if t == "int" else float(v) if t == "float" else v
            s = AuthorNetworkStats(**vals)
            out[(s.author_id, s.year)] = s
    return out


def stats_index(stats: Iterable[AuthorNetworkStats]) -> Mapping[tuple[str, int], AuthorNetworkStats]:
    return {(s.author_id, s.year): s for s in stats}
