"""Graph containers and PDAG utilities shared by the discovery algorithms.

Internally graphs are 0/1 adjacency matrices ``A`` where ``A[i, j] == 1``
and ``A[j, i] == 0`` encodes ``i -> j`` and ``A[i, j] == A[j, i] == 1``
encodes an undirected edge ``i -- j``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class Cpdag:
    variables: tuple[str, ...]
    directed_edges: frozenset[tuple[str, str]] = frozenset()
    undirected_edges: frozenset[frozenset[str]] = frozenset()
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "directed_edges", frozenset(self.directed_edges))
        object.__setattr__(self, "undirected_edges", frozenset(frozenset(e) for e in self.undirected_edges))
        names = set(self.variables)
        for a, b in self.directed_edges:
            if a == b:
                raise ValueError(f"self edge on {a!r}")
            if a not in names or b not in names:
                raise ValueError(f"edge {a}->{b} uses unknown variable")
            if frozenset((a, b)) in self.undirected_edges:
                raise ValueError(f"edge {a}-{b} is both directed and undirected")
        for e in self.undirected_edges:
            if len(e) != 2:
                raise ValueError("undirected edge must join two distinct variables")
        if not is_acyclic(directed_matrix(self.to_matrix())):
            raise ValueError("directed part of the graph has a cycle")

    @classmethod
    def from_matrix(cls, A: np.ndarray, variables: Sequence[str], flags: Iterable[str] = ()) -> "Cpdag":
        directed, undirected = set(), set()
        p = len(variables)
        for i in range(p):
            for j in range(p):
                if i == j or not A[i, j]:
                    continue
                if A[j, i]:
                    if i < j:
                        undirected.add(frozenset((variables[i], variables[j])))
                else:
                    directed.add((variables[i], variables[j]))
        return cls(tuple(variables), frozenset(directed), frozenset(undirected), tuple(flags))

    def to_matrix(self) -> np.ndarray:
        idx = {v: i for i, v in enumerate(self.variables)}
        A = np.zeros((len(self.variables),) * 2, dtype=np.int8)
        for a, b in self.directed_edges:
            A[idx[a], idx[b]] = 1
        for e in self.undirected_edges:
            a, b = sorted(e)
            A[idx[a], idx[b]] = A[idx[b], idx[a]] = 1
        return A

    def adjacencies(self) -> set[frozenset[str]]:
        return {frozenset(e) for e in self.directed_edges} | set(self.undirected_edges)

    def parents(self, v: str) -> list[str]:
        return sorted(a for a, b in self.directed_edges if b == v)

    def orientation(self, a: str, b: str) -> str | None:
        """``'->'``, ``'<-'``, ``'--'`` or ``None`` when not adjacent."""
        if (a, b) in self.directed_edges:
            return "->"
        if (b, a) in self.directed_edges:
            return "<-"
        if frozenset((a, b)) in self.undirected_edges:
            return "--"
        return None


def directed_matrix(A: np.ndarray) -> np.ndarray:
    """Keep only the directed (one-way) marks of a PDAG matrix."""
    return (A.astype(bool) & ~A.T.astype(bool)).astype(np.int8)


def is_acyclic(D: np.ndarray) -> bool:
    D = np.asarray(D, dtype=bool)
    alive = np.ones(len(D), dtype=bool)
    while alive.any():
        sources = alive & ~D[alive].any(axis=0)
        if not sources.any():
            return False
        alive &= ~sources
    return True


def has_directed_path(D: np.ndarray, src: int, dst: int) -> bool:
    stack, seen = [src], {src}
    while stack:
        u = stack.pop()
        if u == dst:
            return True
        for v in np.flatnonzero(D[u]):
            if v not in seen:
                seen.add(int(v))
                stack.append(int(v))
    return False


def _adjacent(A, i, j) -> bool:
    return bool(A[i, j] or A[j, i])


def apply_meek_rules(A: np.ndarray) -> np.ndarray:
    """Close a PDAG under Meek's orientation rules R1-R3, never closing a directed cycle."""
    A = np.asarray(A, dtype=bool).copy()
    changed = True
    while changed:
        changed = False
        U = A & A.T
        D = A & ~A.T
        adj = A | A.T
        for i, j in zip(*np.nonzero(U)):
            if not (A[i, j] and A[j, i]):
                continue
            # R1: k -> i -- j with k, j non-adjacent
            r = (D[:, i] & ~adj[:, j]).any()
            # R2: i -> k -> j
            r = r or (D[i, :] & D[:, j]).any()
            if not r:
                # R3: i -- k1 -> j, i -- k2 -> j, k1 and k2 non-adjacent
                ks = np.flatnonzero(U[i, :] & D[:, j])
                if len(ks) > 1:
                    sub = adj[np.ix_(ks, ks)]
                    r = (~sub[np.triu_indices(len(ks), 1)]).any()
            # with sampling errors an implied orientation can close a cycle; leave those undirected
            if r and not has_directed_path(D, j, i):
                A[j, i] = False
                D[i, j] = True
                U[i, j] = U[j, i] = False
                changed = True
    return A.astype(np.int8)


def v_structure_cpdag(D: np.ndarray) -> np.ndarray:
    """CPDAG of a DAG: keep v-structure edges directed, undirect the rest, close under Meek."""
    D = np.asarray(D, dtype=bool)
    adj = D | D.T
    keep = np.zeros_like(D)
    for k in range(len(D)):
        pa = np.flatnonzero(D[:, k])
        if len(pa) < 2:
            continue
        sub = adj[np.ix_(pa, pa)]
        np.fill_diagonal(sub, True)
        in_v = (~sub).any(axis=1)
        keep[pa[in_v], k] = True
    A = adj.copy()
    A[keep.T] = False
    return apply_meek_rules(A)


def pdag_to_dag(A: np.ndarray) -> np.ndarray | None:
    """Consistent DAG extension of a PDAG (Dor & Tarsi), or ``None`` if none exists."""
    A = np.asarray(A, dtype=bool).copy()
    D = A & ~A.T
    alive = np.ones(len(A), dtype=bool)
    while alive.any():
        found = False
        for x in np.flatnonzero(alive):
            out = A[x] & ~A[:, x] & alive
            if out.any():
                continue
            nbrs = np.flatnonzero(A[x] & A[:, x] & alive)
            adj = np.flatnonzero((A[x] | A[:, x]) & alive)
            ok = True
            for n in nbrs:
                others = adj[adj != n]
                if not (A[n, others] | A[others, n]).all():
                    ok = False
                    break
            if ok:
                D[nbrs, x] = True
                A[x, :] = A[:, x] = False
                alive[x] = False
                found = True
                break
        if not found:
            return None
    return D.astype(np.int8)


def skeleton_f1(true: Iterable[frozenset], found: Iterable[frozenset]) -> float:
    true, found = set(true), set(found)
    if not true and not found:
        return 1.0
    tp = len(true & found)
    if tp == 0:
        return 0.0
    prec, rec = tp / len(found), tp / len(true)
    return 2 * prec * rec / (prec + rec)


@dataclass
class EnsembleGraph:
    variables: tuple[str, ...]
    edges: dict[tuple[str, str], tuple[float, str]] = field(default_factory=dict)
    year: int | None = None

    def weight(self, a: str, b: str) -> float:
        key = (a, b) if a <= b else (b, a)
        return self.edges.get(key, (0.0, ""))[0]

    def orientation(self, a: str, b: str) -> str | None:
        """Orientation as seen from ``a`` to ``b``."""
        if a <= b:
            hit = self.edges.get((a, b))
            return None if hit is None else hit[1]
        hit = self.edges.get((b, a))
        if hit is None:
            return None
        return {"->": "<-", "<-": "->", "--": "--"}[hit[1]]

    def to_json(self) -> str:
        doc = {
            "year": self.year,
            "variables": list(self.variables),
            "edges": [
                {"a": a, "b": b, "weight": w, "orientation": o}
                for (a, b), (w, o) in sorted(self.edges.items())
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EnsembleGraph":
        doc = json.loads(text)
        edges = {(e["a"], e["b"]): (float(e["weight"]), e["orientation"]) for e in doc["edges"]}
        return cls(tuple(doc["variables"]), edges, doc.get("year"))
