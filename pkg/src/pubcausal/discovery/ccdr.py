"""Sparse DAG learning by MCP-penalized coordinate descent with cycle rejection."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .. import kernels
from .graphs import Cpdag


@dataclass
class CcdrFit:
    B: np.ndarray
    lam: float
    converged: bool
    sweeps: int
    bic: float


def _standardize(data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    sd = data.std(axis=0)
    Z = np.zeros_like(data)
    ok = sd > 0
    Z[:, ok] = (data[:, ok] - data[:, ok].mean(axis=0)) / sd[ok]
    return Z


def gram(data: np.ndarray) -> np.ndarray:
    Z = _standardize(data)
    return Z.T @ Z / len(Z)


def bic(S: np.ndarray, B: np.ndarray, n: int) -> float:
    """Gaussian BIC (lower is better) of the linear SEM ``B`` on Gram ``S``."""
    total = 0.0
    for v in range(len(S)):
        b = B[:, v]
        rss_n = S[v, v] - 2.0 * b @ S[:, v] + b @ S @ b
        total += n * math.log(max(rss_n, 1e-12)) + np.count_nonzero(b) * math.log(n)
    return total


def lambda_grid(S: np.ndarray, n_points: int = 10, ratio: float = 0.01) -> np.ndarray:
    off = np.abs(S - np.diag(np.diag(S)))
    lam_max = float(off.max()) if off.size else 0.0
    if lam_max <= 0:
        return np.zeros(1)
    return np.geomspace(lam_max, ratio * lam_max, n_points)


def _to_cpdag(B: np.ndarray, variables, converged: bool) -> Cpdag:
    directed = {(variables[j], variables[v]) for j, v in zip(*np.nonzero(B))}
    return Cpdag(tuple(variables), frozenset(directed), frozenset(), () if converged else ("unconverged",))


def ccdr_simplified(data: np.ndarray, lam: float, variables: Optional[Sequence[str]] = None,
                    gamma: float = 2.0, max_sweeps: int = 500, tol: float = 1e-6) -> Cpdag:
    """Fully directed graph from the nonzero coefficients at one penalty level."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    data = np.asarray(data, dtype=float)
    p = data.shape[1]
    variables = tuple(variables) if variables is not None else tuple(f"x{i}" for i in range(p))
    B, converged, _ = kernels.ccdr_cd(gram(data), lam, gamma, max_sweeps, tol)
    return _to_cpdag(B, variables, converged)


def ccdr_path(data: np.ndarray, n_lambdas: int = 10, gamma: float = 2.0,
              max_sweeps: int = 500, tol: float = 1e-6) -> list[CcdrFit]:
    """Warm-started fits along a descending penalty grid."""
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    S = gram(data)
    B = None
    fits = []
    for lam in lambda_grid(S, n_lambdas):
        B, conv, sweeps = kernels.ccdr_cd(S, float(lam), gamma, max_sweeps, tol, B)
        fits.append(CcdrFit(B.copy(), float(lam), conv, sweeps, bic(S, B, n)))
    return fits


def ccdr(data: np.ndarray, variables: Optional[Sequence[str]] = None, n_lambdas: int = 10,
         gamma: float = 2.0, max_sweeps: int = 500) -> Cpdag:
    """CCDr with the penalty picked by BIC over the grid (first minimum wins)."""
    data = np.asarray(data, dtype=float)
    p = data.shape[1]
    variables = tuple(variables) if variables is not None else tuple(f"x{i}" for i in range(p))
    if p < 2:
        return Cpdag(variables)
    fits = ccdr_path(data, n_lambdas, gamma, max_sweeps)
    best = min(fits, key=lambda f: f.bic)
    return _to_cpdag(best.B, variables, best.converged)


def ccdr_coefficients(data: np.ndarray, lam: float, gamma: float = 2.0,
                      max_sweeps: int = 500, tol: float = 1e-6) -> tuple[np.ndarray, bool]:
    """Standardized coefficient matrix ``B[j, v]`` for ``j -> v`` and the convergence flag."""
    B, converged, _ = kernels.ccdr_cd(gram(data), lam, gamma, max_sweeps, tol)
    return B, converged
