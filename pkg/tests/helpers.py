"""Data generators and brute-force oracles shared by the test modules."""
from fractions import Fraction
from itertools import product

import numpy as np


def gaussian_sem(B, n, rng, noise=1.0):
    """Sample ``X_j = sum_i B[i, j] X_i + e_j`` with ``B`` upper triangular."""
    p = len(B)
    X = np.zeros((n, p))
    for j in range(p):
        X[:, j] = X @ B[:, j] + noise * rng.standard_normal(n)
    return X


def random_sem(seed, n=5000):
    """Random DAG over 5-8 nodes with shuffled column order.

    Returns ``(data, names, true_adjacencies)``.
    """
    rng = np.random.default_rng(seed)
    p = int(rng.integers(5, 9))
    B = np.zeros((p, p))
    for j in range(p):
        for i in range(j):
            if rng.random() < 2.0 / (p - 1):
                B[i, j] = rng.uniform(0.5, 1.0) * rng.choice([-1.0, 1.0])
    X = gaussian_sem(B, n, rng)
    perm = rng.permutation(p)
    names = [f"v{k}" for k in range(p)]
    data = np.empty_like(X)
    data[:, perm] = X
    true = {frozenset((names[perm[i]], names[perm[j]])) for i, j in zip(*np.nonzero(B))}
    return data, names, true


def chain(n, rng, b=0.8):
    B = np.zeros((3, 3))
    B[0, 1] = B[1, 2] = b
    return gaussian_sem(B, n, rng)


def collider(n, rng, b=0.8):
    B = np.zeros((3, 3))
    B[0, 2] = B[1, 2] = b
    return gaussian_sem(B, n, rng)


def random_discrete_sem(rng, n_vars, n_levels):
    """Random categorical Bayesian network over ``range(n_vars)`` in topological order.

    Returns ``(parents, cpts, levels)`` where ``cpts[v][parent_values]`` is a
    probability vector over ``range(levels[v])`` given as ``Fraction``s.
    """
    parents, cpts, levels = {}, {}, {}
    for v in range(n_vars):
        levels[v] = int(rng.integers(2, n_levels + 1))
        pa = [u for u in range(v) if rng.random() < 0.6]
        parents[v] = pa
        table = {}
        for z in product(*(range(levels[u]) for u in pa)):
            w = [Fraction(int(k)) for k in rng.integers(1, 10, size=levels[v])]
            s = sum(w)
            table[z] = [x / s for x in w]
        cpts[v] = table
    return parents, cpts, levels


def joint_distribution(parents, cpts, levels):
    """Exact joint as a dict from full assignment to ``Fraction``."""
    out = {}
    for a in product(*(range(levels[v]) for v in sorted(levels))):
        p = Fraction(1)
        for v in sorted(levels):
            p *= cpts[v][tuple(a[u] for u in parents[v])][a[v]]
        out[a] = p
    return out


def adjustment_oracle(joint, x, x_val, y, y_val, pa):
    """Adjustment formula by exhaustive enumeration over the joint (empirical when the joint is counts)."""
    def marg(cond):
        return sum(p for a, p in joint.items() if all(a[k] == v for k, v in cond.items()))

    total = Fraction(0)
    zs = {tuple(a[u] for u in pa) for a, p in joint.items() if p}
    for z in sorted(zs):
        zc = dict(zip(pa, z))
        pz = marg(zc)
        den = marg({**zc, x: x_val})
        if den:
            cond = marg({**zc, x: x_val, y: y_val}) / den
        else:
            cond = marg({**zc, y: y_val}) / pz
        total += cond * pz
    return total


def empirical_joint(samples):
    """Counts of each observed row as ``Fraction`` weights summing to one."""
    n = len(samples)
    out = {}
    for row in map(tuple, samples):
        out[row] = out.get(row, Fraction(0)) + Fraction(1, n)
    return out


def sample_discrete(parents, cpts, levels, n, rng):
    X = np.zeros((n, len(levels)), dtype=int)
    for v in sorted(levels):
        for i in range(n):
            probs = [float(p) for p in cpts[v][tuple(X[i, u] for u in parents[v])]]
            X[i, v] = rng.choice(levels[v], p=probs)
    return X


def dense_pagerank(graph, damping=0.85):
    """Leading eigenvector of the dense Google matrix."""
    n = len(graph.nodes)
    idx = {a: i for i, a in enumerate(graph.nodes)}
    W = np.zeros((n, n))
    for (a, b), m in graph.edges.items():
        W[idx[a], idx[b]] = W[idx[b], idx[a]] = m
    P = np.full((n, n), 1.0 / n)
    out = W.sum(axis=1)
    P[out > 0] = W[out > 0] / out[out > 0, None]
    G = damping * P.T + (1 - damping) / n
    vals, vecs = np.linalg.eig(G)
    v = np.real(vecs[:, np.argmax(np.real(vals))])
    return dict(zip(graph.nodes, v / v.sum()))


def fog_fixture():
    # 5 sentences of 20 words each, two of which have three syllables
    sentence = " ".join(["cat"] * 18 + ["beautiful", "elephant"]) + "."
    return " ".join([sentence] * 5)
