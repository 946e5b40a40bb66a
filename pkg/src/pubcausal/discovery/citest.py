"""Fisher-z partial-correlation conditional independence test."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.stats import norm

_R_CLIP = 1.0 - 1e-12


@dataclass(frozen=True)
class CiTestResult:
    i: int
    j: int
    conditioning_set: tuple[int, ...]
    statistic: float
    p_value: float
    independent: bool
    low_rank: bool = False


def correlation_matrix(data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    sd = data.std(axis=0)
    Z = np.zeros_like(data)
    ok = sd > 0
    Z[:, ok] = (data[:, ok] - data[:, ok].mean(axis=0)) / sd[ok]
    C = Z.T @ Z / len(data)
    np.fill_diagonal(C, 1.0)
    return C


def partial_correlation(C: np.ndarray, i: int, j: int, S: Iterable[int]) -> tuple[float, bool]:
    """Partial correlation of ``i, j`` given ``S`` from a correlation matrix.

    Returns ``(r, low_rank)``; a singular submatrix is inverted with the
    pseudo-inverse and flagged.
    """
    idx = [i, j, *S]
    sub = C[np.ix_(idx, idx)]
    low_rank = False
    if len(idx) == 2:
        r = sub[0, 1]
    else:
        try:
            cond = np.linalg.cond(sub)
            if not np.isfinite(cond) or cond > 1e12:
                raise np.linalg.LinAlgError
            P = np.linalg.inv(sub)
        except np.linalg.LinAlgError:
            P = np.linalg.pinv(sub)
            low_rank = True
        denom = math.sqrt(abs(P[0, 0] * P[1, 1]))
        r = -P[0, 1] / denom if denom > 0 else 0.0
    return float(min(max(r, -_R_CLIP), _R_CLIP)), low_rank


class FisherZ:
    """Fisher-z tester over a fixed data set; the correlation matrix is shared."""

    def __init__(self, data: Optional[np.ndarray] = None, alpha: float = 0.01, *,
                 corr: Optional[np.ndarray] = None, n: Optional[int] = None):
        if corr is None:
            data = np.asarray(data, dtype=float)
            corr, n = correlation_matrix(data), data.shape[0]
        self.C = corr
        self.n = int(n)
        self.alpha = alpha
        self.calls = 0
        self.low_rank_seen = False

    def test(self, i: int, j: int, S: Iterable[int] = ()) -> CiTestResult:
        S = tuple(sorted(S))
        self.calls += 1
        if self.n <= len(S) + 3:
            raise ValueError(f"need n > |S| + 3 (n={self.n}, |S|={len(S)})")
        if i == j:
            return CiTestResult(i, j, S, math.inf, 0.0, False)
        r, low_rank = partial_correlation(self.C, i, j, S)
        self.low_rank_seen |= low_rank
        z = 0.5 * math.log((1 + r) / (1 - r))
        stat = math.sqrt(self.n - len(S) - 3) * abs(z)
        p = float(min(1.0, 2.0 * norm.sf(stat)))
        return CiTestResult(i, j, S, stat, p, p > self.alpha, low_rank)

    def log_p(self, result: CiTestResult) -> float:
        """Natural log of the two-sided p-value without underflow."""
        if math.isinf(result.statistic):
            return -math.inf
        return math.log(2.0) + float(norm.logsf(result.statistic))


def fisher_z_test(data: np.ndarray, i: int, j: int, S: Iterable[int] = (), alpha: float = 0.01) -> CiTestResult:
    return FisherZ(data, alpha).test(i, j, S)
