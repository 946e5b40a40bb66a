"""Run the four learners on panel column subsets and merge the results."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from ..lexicon import CANONICAL_ENTITIES
from ..panel import COVARIATES, OUTCOME_COLUMNS, TREATMENT_COLUMNS, AnalysisPanel
from .ccdr import ccdr
from .citest import FisherZ
from .ensemble import ensemble_merge
from .ges import ges
from .graphs import Cpdag, EnsembleGraph
from .mmpc import mmpc_cpdag
from .pc import pc

LOGGER = logging.getLogger(__name__)

ALGORITHMS = ("pc", "ges", "mmpc", "ccdr")


@dataclass(frozen=True)
class DiscoveryConfig:
    alpha: float = 0.01
    max_cond: int = 3
    n_lambdas: int = 10
    gamma: float = 2.0
    max_sweeps: int = 500
    full_panel: bool = False


def entity_subset(entity: str) -> list[str]:
    """Covariates plus the publish treatment and outcomes tied to ``entity``."""
    return [
        *COVARIATES,
        f"publish_on:{entity}",
        f"adopt:{entity}",
        f"maintain:{entity}",
        f"retire:{entity}",
        "paused",
        "persistent",
    ]


def prepare(panel: AnalysisPanel, names: Sequence[str]) -> tuple[np.ndarray, list[str]]:
    """Complete-case matrix with constant and all-missing columns removed."""
    names = [n for n in names if not np.all(np.isnan(panel.column(n)))]
    M = panel.matrix(names)
    if M.size:
        M = M[~np.isnan(M).any(axis=1)]
    keep = [i for i in range(len(names)) if len(M) and np.ptp(M[:, i]) > 0]
    return M[:, keep], [names[i] for i in keep]


def run_algorithms(data: np.ndarray, variables: Sequence[str], config: DiscoveryConfig = DiscoveryConfig()) -> dict[str, Cpdag]:
    tester = FisherZ(data, config.alpha)
    return {
        "pc": pc(data, config.alpha, variables, config.max_cond, tester),
        "ges": ges(data, variables),
        "mmpc": mmpc_cpdag(data, config.alpha, variables, config.max_cond, tester),
        "ccdr": ccdr(data, variables, config.n_lambdas, config.gamma, config.max_sweeps),
    }


def discover(data: np.ndarray, variables: Sequence[str], year: Optional[int] = None,
             config: DiscoveryConfig = DiscoveryConfig()) -> EnsembleGraph:
    variables = list(variables)
    if len(variables) < 2 or data.shape[0] <= config.max_cond + 4:
        return EnsembleGraph(tuple(variables), {}, year)
    graphs = run_algorithms(data, variables, config)
    return ensemble_merge([graphs[a] for a in ALGORITHMS], year)


def merge_max(graphs: Iterable[EnsembleGraph], year: Optional[int] = None) -> EnsembleGraph:
    """Union of subset graphs; a shared edge keeps its highest-weight version."""
    variables: list[str] = []
    edges: dict = {}
    for g in graphs:
        variables += [v for v in g.variables if v not in variables]
        for key, (w, o) in g.edges.items():
            if key not in edges or w > edges[key][0]:
                edges[key] = (w, o)
    order = [c for c in (*COVARIATES, *TREATMENT_COLUMNS, *OUTCOME_COLUMNS) if c in variables]
    order += sorted(v for v in variables if v not in order)
    return EnsembleGraph(tuple(order), dict(sorted(edges.items())), year)


def discover_panel(panel: AnalysisPanel, entities: Optional[Sequence[str]] = None,
                   extra_subsets: Sequence[Sequence[str]] = (),
                   config: DiscoveryConfig = DiscoveryConfig()) -> EnsembleGraph:
    """Yearly ensemble graph.

    By default each entity's column subset is learned separately and the
    results are merged; ``config.full_panel`` learns all columns at once.
    """
    if config.full_panel:
        names = [*COVARIATES, *TREATMENT_COLUMNS, *OUTCOME_COLUMNS]
        data, names = prepare(panel, names)
        return discover(data, names, panel.year, config)
    entities = CANONICAL_ENTITIES if entities is None else entities
    # an entity nobody (or everybody) published on has no treatment variation to learn from
    varied = [e for e in entities if np.ptp(panel.column(f"publish_on:{e}")) > 0] if len(panel) else []
    subsets = [entity_subset(e) for e in varied] + [list(s) for s in extra_subsets]
    parts = []
    for names in subsets:
        data, kept = prepare(panel, names)
        if len(kept) < len(names):
            LOGGER.debug("dropped constant columns: %s", sorted(set(names) - set(kept)))
        parts.append(discover(data, kept, panel.year, config))
    return merge_max(parts, panel.year)
