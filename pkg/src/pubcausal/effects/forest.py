"""Honest causal forest with out-of-bag unit effects."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..panel import EffectData
from ..seeding import derive_rng
from .base import AteEstimate, arm_counts, undefined


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 500
    subsample: float = 0.5
    honesty: float = 0.5
    min_leaf: int = 5
    max_depth: int = 64


def fit_forest(X, t, y, config: ForestConfig = ForestConfig(), seed: int = 0):
    """Grow the trees; returns ``(trees, in_sample_masks, n_skipped)``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = len(X)
    m = int(np.floor(config.subsample * n))
    n_struct = int(np.floor(config.honesty * m))
    trees, masks, skipped = [], [], 0
    for b in range(config.n_trees):
        rng = derive_rng(seed, "tree", b)
        sub = rng.choice(n, size=m, replace=False)
        tree = kernels.grow_tree(X, t, y, sub[:n_struct], sub[n_struct:], config.min_leaf, config.max_depth)
        if tree is None:
            skipped += 1
            continue
        mask = np.zeros(n, dtype=bool)
        mask[sub] = True
        trees.append(tree)
        masks.append(mask)
    return trees, masks, skipped


def oob_cate(trees, masks, X) -> np.ndarray:
    """Per-unit effect averaged over trees that did not sample the unit.

    Units sampled by every tree fall back to the all-tree average.
    """
    n = len(X)
    total = np.zeros(n)
    count = np.zeros(n)
    full = np.zeros(n)
    for tree, mask in zip(trees, masks):
        pred = kernels.predict_tree(tree, X)
        full += pred
        total[~mask] += pred[~mask]
        count[~mask] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        cate = np.where(count > 0, total / np.maximum(count, 1), full / max(len(trees), 1))
    return cate


def causal_forest_ate(data: EffectData, config: ForestConfig = ForestConfig(), seed: int = 0) -> AteEstimate:
    n1, n0 = arm_counts(data)
    if n1 == 0 or n0 == 0:
        return undefined("causal_forest", data, "empty arm")
    trees, masks, skipped = fit_forest(data.X, data.t, data.y, config, seed)
    diag = {"trees": len(trees), "skipped_trees": skipped}
    if skipped * 2 > config.n_trees or not trees:
        return undefined("causal_forest", data, "too many infeasible trees", **diag)
    cate = oob_cate(trees, masks, data.X)
    diag["cate_sd"] = float(np.std(cate))
    return AteEstimate("causal_forest", data.treatment, data.outcome, data.year, float(np.mean(cate)), n1, n0, True, diag)
