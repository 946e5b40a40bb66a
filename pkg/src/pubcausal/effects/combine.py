"""Cross-method averaging and fixed-decimal rendering of effect cells."""
from __future__ import annotations

import math
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Optional, Union

from .base import AteEstimate

DEFAULT_MEAN_METHODS = ("causal_forest", "vaine")


def _value(e: Union[AteEstimate, float, None]) -> Optional[float]:
    if e is None:
        return None
    if isinstance(e, AteEstimate):
        return e.estimate if e.defined else None
    return None if math.isnan(e) else float(e)


def mean_across_methods(estimates: Iterable[Union[AteEstimate, float, None]],
                        methods: Optional[Iterable[str]] = DEFAULT_MEAN_METHODS) -> float:
    """Mean of the defined estimates, or NaN when none is defined.

    Values are averaged as shortest decimal reprs, so two-decimal inputs
    give the decimal mean (0.71 and 0.88 give exactly 0.795) rather than a
    binary round-off neighbour.
    """
    allowed = set(methods) if methods is not None else None
    vals = []
    for e in estimates:
        if allowed is not None and isinstance(e, AteEstimate) and e.method not in allowed:
            continue
        v = _value(e)
        if v is not None:
            vals.append(Decimal(repr(v)))
    if not vals:
        return math.nan
    return float(sum(vals) / len(vals))


def format_cell(value: Optional[float], places: int = 2) -> str:
    """Half-up decimal rendering of the shortest repr; undefined renders as 0."""
    if value is None or math.isnan(value):
        value = 0.0
    q = Decimal(1).scaleb(-places)
    out = Decimal(repr(float(value))).quantize(q, rounding=ROUND_HALF_UP)
    if out == 0:
        out = abs(out)
    return f"{out:.{places}f}"
