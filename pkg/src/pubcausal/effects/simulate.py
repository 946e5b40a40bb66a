"""Small generators with known effects, for calibration checks."""
from __future__ import annotations

from typing import Callable, Optional, Union

import numpy as np
from scipy.special import expit

from ..panel import EffectData


def confounded_data(n: int, seed: int, tau: Union[float, Callable] = 2.0,
                    confounding: float = 1.5, outcome_weight: float = 1.5) -> EffectData:
    """``c ~ N(0,1)``, ``t ~ Bernoulli(sigmoid(confounding * c))``, ``y = tau t + w c + e``.

    ``tau`` may be a function of ``c`` for heterogeneous effects.
    """
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n)
    t = (rng.random(n) < expit(confounding * c)).astype(np.int8)
    eff = tau(c) if callable(tau) else tau
    y = eff * t + outcome_weight * c + rng.normal(size=n)
    return EffectData(c[:, None], t, y)


def null_data(n: int, seed: int, n_covariates: int = 1, p_treat: Optional[float] = 0.5) -> EffectData:
    """Random treatment and pure-noise outcome."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, n_covariates))
    t = (rng.random(n) < p_treat).astype(np.int8)
    y = rng.normal(size=n)
    return EffectData(X, t, y)
