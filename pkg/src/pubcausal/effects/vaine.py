"""Cluster-local effect estimation in a low-dimensional covariate projection."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from sklearn.cluster import KMeans

from ..panel import EffectData
from ..seeding import derive_int
from .base import AteEstimate, arm_counts, undefined


@dataclass(frozen=True)
class VaineConfig:
    k: int = 10
    alpha: float = 0.05
    n_components: int = 2
    n_init: int = 50
    weighted: bool = False


def project(X: np.ndarray, n_components: int = 2) -> np.ndarray:
    """Top principal-component scores of the (already standardized) covariates."""
    X = np.asarray(X, dtype=float)
    Xc = X - X.mean(axis=0)
    q = min(n_components, X.shape[1])
    _, _, Vt = np.linalg.svd(Xc, full_matrices=False)
    return Xc @ Vt[:q].T


def group_effect(y: np.ndarray, t: np.ndarray) -> tuple[float, float]:
    """OLS slope of ``y`` on a binary ``t`` and its two-sided t-test p-value.

    The slope is the difference of arm means.
    """
    m1 = t == 1
    n1, n0 = int(m1.sum()), int((~m1).sum())
    y1, y0 = y[m1], y[~m1]
    mu1, mu0 = y1.mean(), y0.mean()
    slope = float(mu1 - mu0)
    dof = n1 + n0 - 2
    if dof <= 0:
        return slope, float("nan")
    ssr = float(((y1 - mu1) ** 2).sum()) + float(((y0 - mu0) ** 2).sum())
    se = np.sqrt(ssr / dof * (1.0 / n1 + 1.0 / n0))
    if se == 0.0:
        return slope, 0.0 if slope != 0.0 else 1.0
    return slope, float(2.0 * stats.t.sf(abs(slope) / se, dof))


def cluster(X: np.ndarray, config: VaineConfig, seed: int) -> np.ndarray:
    Z = project(X, config.n_components)
    k = min(config.k, len(np.unique(Z, axis=0)))
    km = KMeans(n_clusters=k, init="k-means++", n_init=config.n_init,
                random_state=derive_int(seed, "vaine-kmeans"))
    return km.fit_predict(Z)


def vaine_ate(data: EffectData, config: VaineConfig = VaineConfig(), seed: int = 0) -> AteEstimate:
    n1, n0 = arm_counts(data)
    if n1 == 0 or n0 == 0:
        return undefined("vaine", data, "empty arm", groups=[])
    if data.n < 2:
        return undefined("vaine", data, "too few units", groups=[])
    labels = cluster(data.X, config, seed)
    groups = []
    for g in range(labels.max() + 1):
        idx = labels == g
        tg = data.t[idx]
        if not (tg == 1).any() or not (tg == 0).any():
            groups.append({"group": g, "size": int(idx.sum()), "effect": None, "p_value": None, "retained": False})
            continue
        eff, p = group_effect(data.y[idx], tg)
        keep = bool(np.isfinite(p) and p < config.alpha)
        groups.append({"group": g, "size": int(idx.sum()), "effect": eff, "p_value": p, "retained": keep})
    kept = [g for g in groups if g["retained"]]
    diag = {"groups": groups, "n_groups": len(groups), "n_retained": len(kept)}
    if not kept:
        return undefined("vaine", data, "no significant group", **diag)
    effects = np.array([g["effect"] for g in kept])
    if config.weighted:
        w = np.array([g["size"] for g in kept], dtype=float)
        est = float(np.sum(effects * w) / w.sum())
    else:
        est = float(np.sum(effects) / len(effects))
    return AteEstimate("vaine", data.treatment, data.outcome, data.year, est, n1, n0, True, diag)
