"""Pipeline configuration: YAML schema, defaults and validation."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from .discovery.runner import DiscoveryConfig
from .effects.base import METHODS
from .effects.forest import ForestConfig
from .effects.vaine import VaineConfig
from .panel import ANALYSIS_YEARS, GRANULARITIES
from .trends import NON_ENGLISH

SCHEMA_VERSION = 1

DEFAULT_CELLS = (
    ("publish_on:bidirectional lstm", "retire:lstm"),
    ("publish_on:bidirectional lstm", "pub_increase_rate"),
    ("publish_on:arabic", "maintain:non-English language"),
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InputPaths:
    bib: Optional[str] = None
    texts: Optional[str] = None
    countries: Optional[str] = None
    lexicon: Optional[str] = None


@dataclass(frozen=True)
class EstimationConfig:
    methods: tuple[str, ...] = METHODS
    cells: tuple[tuple[str, str], ...] = DEFAULT_CELLS
    caliper: float = 0.2
    forest: ForestConfig = ForestConfig()
    vaine: VaineConfig = VaineConfig()
    mean_methods: tuple[str, ...] = ("causal_forest", "vaine")


@dataclass(frozen=True)
class TrendConfig:
    weight_threshold: float = 0.5
    min_years: int = 2
    persistence_group: tuple[str, ...] = NON_ENGLISH


@dataclass(frozen=True)
class PipelineConfig:
    inputs: InputPaths = InputPaths()
    years: tuple[int, int] = ANALYSIS_YEARS
    granularity: str = "yearly_portfolio"
    retire_window: int = 2
    discovery: DiscoveryConfig = DiscoveryConfig()
    estimation: EstimationConfig = EstimationConfig()
    trends: TrendConfig = TrendConfig()
    seed: Optional[int] = 0
    output_dir: str = "out"
    schema_version: int = SCHEMA_VERSION

    @property
    def year_list(self) -> list[int]:
        return list(range(self.years[0], self.years[1] + 1))

    def validate(self) -> "PipelineConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        lo, hi = self.years
        if not (ANALYSIS_YEARS[0] <= lo <= hi <= ANALYSIS_YEARS[1]):
            raise ConfigError(f"years must lie within {ANALYSIS_YEARS[0]}-{ANALYSIS_YEARS[1]}")
        if self.granularity not in GRANULARITIES:
            raise ConfigError(f"granularity must be one of {GRANULARITIES}")
        if self.retire_window < 1:
            raise ConfigError("retire_window must be positive")
        d = self.discovery
        if not 0 < d.alpha < 1 or d.max_cond < 0 or d.n_lambdas < 1 or d.gamma <= 1 or d.max_sweeps < 1:
            raise ConfigError("discovery parameters out of range")
        e = self.estimation
        unknown = set(e.methods) - set(METHODS)
        if unknown:
            raise ConfigError(f"unknown methods: {sorted(unknown)}")
        if e.caliper <= 0:
            raise ConfigError("caliper must be positive")
        f = e.forest
        if f.n_trees < 1 or not 0 < f.subsample <= 1 or not 0 < f.honesty < 1 or f.min_leaf < 1:
            raise ConfigError("forest parameters out of range")
        if e.vaine.k < 2 or not 0 < e.vaine.alpha < 1 or e.vaine.n_init < 1:
            raise ConfigError("vaine parameters out of range")
        if not 0 < self.trends.weight_threshold <= 1 or self.trends.min_years < 1:
            raise ConfigError("trend parameters out of range")
        if self.seed is not None and (isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0):
            raise ConfigError("seed must be a non-negative integer")
        stochastic = {"psm", "causal_forest", "vaine"} & set(e.methods)
        if stochastic and self.seed is None:
            raise ConfigError("a seed is required when psm, causal_forest or vaine is enabled")
        return self

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["years"] = list(self.years)
        doc["estimation"]["cells"] = [list(c) for c in self.estimation.cells]
        doc["estimation"]["methods"] = list(self.estimation.methods)
        doc["estimation"]["mean_methods"] = list(self.estimation.mean_methods)
        doc["trends"]["persistence_group"] = list(self.trends.persistence_group)
        return doc

    def digest(self) -> str:
        """Hash of the analysis settings; where the outputs go does not enter it."""
        doc = self.to_dict()
        doc.pop("output_dir")
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def _build(cls, doc: Any, path: str):
    if doc is None:
        return cls()
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping")
    known = {f.name for f in fields(cls)}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"{path}: unknown key(s) {sorted(extra)}")
    return cls(**doc)


def config_from_dict(doc: dict) -> PipelineConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    doc = dict(doc)
    try:
        est = dict(doc.pop("estimation", None) or {})
        if "forest" in est:
            est["forest"] = _build(ForestConfig, est["forest"], "estimation.forest")
        if "vaine" in est:
            est["vaine"] = _build(VaineConfig, est["vaine"], "estimation.vaine")
        for key in ("methods", "mean_methods"):
            if key in est:
                est[key] = tuple(est[key])
        if "cells" in est:
            est["cells"] = tuple(tuple(c) for c in est["cells"])
        trends = dict(doc.pop("trends", None) or {})
        if "persistence_group" in trends:
            trends["persistence_group"] = tuple(trends["persistence_group"])
        built = {
            "inputs": _build(InputPaths, doc.pop("inputs", None), "inputs"),
            "discovery": _build(DiscoveryConfig, doc.pop("discovery", None), "discovery"),
            "estimation": _build(EstimationConfig, est, "estimation"),
            "trends": _build(TrendConfig, trends, "trends"),
        }
        if "years" in doc:
            years = doc.pop("years")
            if not (isinstance(years, (list, tuple)) and len(years) == 2):
                raise ConfigError("years must be [start, end]")
            built["years"] = (int(years[0]), int(years[1]))
        cfg = _build(PipelineConfig, {**doc, **built}, "root")
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def load_config(path: Optional[Path]) -> PipelineConfig:
    if path is None:
        return PipelineConfig().validate()
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(doc or {})


def with_overrides(cfg: PipelineConfig, **kw) -> PipelineConfig:
    inputs = {k: v for k, v in kw.items() if k in {f.name for f in fields(InputPaths)} and v is not None}
    top = {k: v for k, v in kw.items() if k in ("years", "granularity", "seed", "output_dir") and v is not None}
    if "years" in top:
        top["years"] = tuple(top["years"])
    cfg = replace(cfg, inputs=replace(cfg.inputs, **inputs), **top)
    return cfg.validate()


def dump_config(cfg: PipelineConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)
