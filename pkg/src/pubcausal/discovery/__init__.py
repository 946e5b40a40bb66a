"""Structure learning: PC, GES, MMPC, CCDr and their agreement ensemble."""
from .adjustment import do_effect
from .ccdr import ccdr, ccdr_simplified
from .citest import CiTestResult, FisherZ, fisher_z_test
from .ensemble import ensemble_merge
from .ges import ges, ges_search
from .graphs import Cpdag, EnsembleGraph
from .mmpc import mmpc
from .pc import pc
from .runner import DiscoveryConfig, discover, discover_panel, entity_subset

__all__ = [
    "CiTestResult", "Cpdag", "DiscoveryConfig", "EnsembleGraph", "FisherZ", "ccdr",
    "ccdr_simplified", "discover", "discover_panel", "do_effect", "ensemble_merge",
    "entity_subset", "fisher_z_test", "ges", "ges_search", "mmpc", "pc",
]
