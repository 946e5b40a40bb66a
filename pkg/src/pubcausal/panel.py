"""Per-year analysis panels: covariates, binary treatments and outcomes."""
from __future__ import annotations

import csv
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import AuthorPaperRow
from .lexicon import CANONICAL_ENTITIES, EntityMentionSet
from .network import AuthorNetworkStats

ANALYSIS_YEARS = (2014, 2019)
GRANULARITIES = ("publication_record", "yearly_portfolio")

COVARIATES = (
    "n_papers_total",
    "n_papers_last_year",
    "n_papers_last_5y",
    "n_coauthors",
    "avg_papers_per_coauthor",
    "coauthor_likelihood",
    "centrality",
    "pagerank",
    "years_since_first",
    "is_conference",
    "n_authors",
    "page_length",
    "word_count",
    "fog_index",
)
COUNTRIES = ("US", "China", "Germany", "Japan", "France", "Other")
OUTCOME_KINDS = ("adopt", "maintain", "retire")
GENERAL_OUTCOMES = ("pub_increase_rate", "paused", "persistent")

PUBLISH_COLUMNS = tuple(f"publish_on:{e}" for e in CANONICAL_ENTITIES)
COUNTRY_COLUMNS = tuple(f"scientist_from:{c}" for c in COUNTRIES)
TREATMENT_COLUMNS = PUBLISH_COLUMNS + COUNTRY_COLUMNS
OUTCOME_COLUMNS = (
    tuple(f"{k}:{e}" for k in OUTCOME_KINDS for e in CANONICAL_ENTITIES) + GENERAL_OUTCOMES
)

# portfolio aggregation of per-paper features
PORTFOLIO_AGGREGATION = {
    "is_conference": "max",
    "n_authors": "mean",
    "page_length": "sum",
    "word_count": "sum",
    "fog_index": "mean",
}

_COUNTRY_ALIASES = {
    "us": "US",
    "usa": "US",
    "united states": "US",
    "united states of america": "US",
    "cn": "China",
    "china": "China",
    "de": "Germany",
    "germany": "Germany",
    "jp": "Japan",
    "japan": "Japan",
    "fr": "France",
    "france": "France",
}


def country_bucket(country: Optional[str]) -> Optional[str]:
    if country is None or not country.strip():
        return None
    return _COUNTRY_ALIASES.get(country.strip().lower(), "Other")


@dataclass(frozen=True)
class TreatmentAssignment:
    unit_id: str
    year: int
    publish_on: tuple[int, ...]
    scientist_from: tuple[int, ...]

    def __post_init__(self):
        if sum(self.scientist_from) > 1:
            raise ValueError("scientist_from is one-hot")


class PublicationHistory:
    """Per-author yearly paper counts and entity sets."""

    def __init__(self, rows: Sequence[AuthorPaperRow], mentions: Mapping[str, EntityMentionSet],
                 horizon: Optional[int] = None):
        self.counts: dict[str, Counter] = defaultdict(Counter)
        self.entities: dict[str, dict[int, set[str]]] = defaultdict(lambda: defaultdict(set))
        self.first: dict[str, int] = {}
        for r in rows:
            self.counts[r.author_id][r.year] += 1
            ms = mentions.get(r.paper_id)
            if ms is not None:
                self.entities[r.author_id][r.year].update(ms.entities)
            self.first[r.author_id] = min(self.first.get(r.author_id, r.year), r.year)
        self.horizon = horizon if horizon is not None else max((r.year for r in rows), default=0)

    def authors_in(self, year: int) -> list[str]:
        return sorted(a for a, c in self.counts.items() if c.get(year, 0) > 0)

    def n_papers(self, author_id: str, year: int) -> int:
        return self.counts[author_id].get(year, 0)

    def published_on(self, author_id: str, entity: str, year: int) -> bool:
        return entity in self.entities.get(author_id, {}).get(year, ())

    def published_any(self, author_id: str, entities, year: int) -> bool:
        got = self.entities.get(author_id, {}).get(year, set())
        return any(e in got for e in entities)

    def ever_before(self, author_id: str, entity: str, year: int) -> bool:
        """Published on ``entity`` in any year up to and including ``year``."""
        return any(
            entity in ents for y, ents in self.entities.get(author_id, {}).items() if y <= year
        )


def encode_outcome(history: PublicationHistory, author_id: str, entity: str, year: int, kind: str,
                   retire_window: int = 2) -> Optional[int]:
    """Adopt / maintain / retire indicator, or ``None`` past the data horizon."""
    need = year + (retire_window if kind == "retire" else 1)
    if need > history.horizon:
        return None
    prior = history.ever_before(author_id, entity, year)
    nxt = history.published_on(author_id, entity, year + 1)
    if kind == "adopt":
        return int(not prior and nxt)
    if kind == "maintain":
        return int(prior and nxt)
    if kind == "retire":
        later = any(history.published_on(author_id, entity, year + k) for k in range(1, retire_window + 1))
        return int(prior and not later)
    raise ValueError(f"unknown outcome kind {kind!r}")


def encode_general_outcomes(history: PublicationHistory, author_id: str, year: int
                            ) -> tuple[Optional[float], Optional[int], Optional[int]]:
    """``(pub_increase_rate, paused, persistent)``; ``None`` where undefined."""
    n_now = history.n_papers(author_id, year)
    n1 = history.n_papers(author_id, year + 1)
    rate = persistent = paused = None
    if year + 1 <= history.horizon and n_now > 0:
        rate = n1 / n_now
        persistent = int(n1 > 0)
    if year + 2 <= history.horizon:
        paused = int(n1 == 0 and history.n_papers(author_id, year + 2) == 0)
    return rate, paused, persistent


def _publish_vector(entities) -> tuple[int, ...]:
    return tuple(int(e in entities) for e in CANONICAL_ENTITIES)


def _country_vector(country: Optional[str]) -> tuple[int, ...]:
    b = country_bucket(country)
    return tuple(int(c == b) for c in COUNTRIES)


def encode_treatments(rows: Sequence[AuthorPaperRow], mentions: Mapping[str, EntityMentionSet],
                      year: int, granularity: str) -> list[TreatmentAssignment]:
    """Record units get their paper's entities; portfolio units OR over the year."""
    if granularity not in GRANULARITIES:
        raise ValueError(f"unknown granularity {granularity!r}")
    out = []
    year_rows = [r for r in rows if r.year == year]
    if granularity == "publication_record":
        for r in sorted(year_rows, key=lambda r: (r.author_id, r.paper_id)):
            ms = mentions.get(r.paper_id)
            ents = ms.entities if ms is not None else frozenset()
            out.append(TreatmentAssignment(f"{r.author_id}|{r.paper_id}", year,
                                           _publish_vector(ents), _country_vector(r.country)))
        return out
    grouped: dict[str, list[AuthorPaperRow]] = defaultdict(list)
    for r in year_rows:
        grouped[r.author_id].append(r)
    for a in sorted(grouped):
        ents: set[str] = set()
        for r in grouped[a]:
            ms = mentions.get(r.paper_id)
            if ms is not None:
                ents |= ms.entities
        out.append(TreatmentAssignment(a, year, _publish_vector(ents), _country_vector(_author_country(grouped[a]))))
    return out


def _author_country(rows: Sequence[AuthorPaperRow]) -> Optional[str]:
    seen = [r.country for r in rows if r.country]
    if not seen:
        return None
    counts = Counter(seen)
    best = max(counts.values())
    return next(c for c in seen if counts[c] == best)


def standardize(X: np.ndarray) -> np.ndarray:
    """Column-wise z-scores (population SD); constant columns become zeros."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        return X.copy()
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    Z = np.zeros_like(X)
    ok = sd > 1e-12 * np.maximum(1.0, np.abs(mu))
    Z[:, ok] = (X[:, ok] - mu[ok]) / sd[ok]
    return Z


@dataclass
class EffectData:
    """Arrays for one (treatment, outcome) cell: standardized covariates, arm, outcome."""

    X: np.ndarray
    t: np.ndarray
    y: np.ndarray
    treatment: str = "t"
    outcome: str = "y"
    year: Optional[int] = None
    unit_ids: Optional[list[str]] = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        self.t = np.asarray(self.t).astype(np.int8)
        self.y = np.asarray(self.y, dtype=float)
        if not (len(self.X) == len(self.t) == len(self.y)):
            raise ValueError("X, t and y must have the same length")

    @property
    def n(self) -> int:
        return len(self.y)


@dataclass
class AnalysisPanel:
    year: int
    granularity: str
    unit_ids: list[str]
    covariates: np.ndarray
    treatments: np.ndarray
    outcomes: np.ndarray
    standardized: np.ndarray = field(init=False)

    def __post_init__(self):
        n = len(self.unit_ids)
        self.covariates = np.asarray(self.covariates, dtype=float).reshape(n, len(COVARIATES))
        self.treatments = np.asarray(self.treatments, dtype=np.int8).reshape(n, len(TREATMENT_COLUMNS))
        self.outcomes = np.asarray(self.outcomes, dtype=float).reshape(n, len(OUTCOME_COLUMNS))
        if not np.all(np.isfinite(self.covariates)):
            raise ValueError("covariates must be finite")
        self.standardized = standardize(self.covariates)

    def __len__(self) -> int:
        return len(self.unit_ids)

    def column(self, name: str, standardized: bool = True) -> np.ndarray:
        if name in COVARIATES:
            src = self.standardized if standardized else self.covariates
            return src[:, COVARIATES.index(name)]
        if name in TREATMENT_COLUMNS:
            return self.treatments[:, TREATMENT_COLUMNS.index(name)].astype(float)
        if name in OUTCOME_COLUMNS:
            return self.outcomes[:, OUTCOME_COLUMNS.index(name)]
        raise KeyError(name)

    def effect_data(self, treatment: str, outcome: str) -> EffectData:
        """Units with a defined outcome; covariates standardized over the whole panel."""
        y = self.column(outcome)
        keep = ~np.isnan(y)
        return EffectData(
            X=self.standardized[keep],
            t=self.column(treatment)[keep],
            y=y[keep],
            treatment=treatment,
            outcome=outcome,
            year=self.year,
            unit_ids=[u for u, k in zip(self.unit_ids, keep) if k],
        )

    def matrix(self, names: Sequence[str]) -> np.ndarray:
        return np.column_stack([self.column(n) for n in names]) if names else np.empty((len(self), 0))


@dataclass
class CorpusTables:
    rows: Sequence[AuthorPaperRow]
    mentions: Mapping[str, EntityMentionSet]
    network: Mapping[tuple[str, int], AuthorNetworkStats]
    horizon: Optional[int] = None


def _author_covariates(stats: AuthorNetworkStats) -> list[float]:
    return [
        stats.n_papers_total,
        stats.n_papers_last_year,
        stats.n_papers_last_5y,
        stats.n_coauthors,
        stats.avg_papers_per_coauthor,
        stats.coauthor_likelihood,
        stats.centrality,
        stats.pagerank,
        stats.years_since_first,
    ]


def _paper_covariates(r: AuthorPaperRow) -> list[float]:
    return [int(r.venue_kind == "conference"), r.n_authors, r.page_length, r.word_count, r.fog_index]


def _aggregate(rows: Sequence[AuthorPaperRow]) -> list[float]:
    per = np.array([_paper_covariates(r) for r in rows], dtype=float)
    out = []
    for j, name in enumerate(COVARIATES[9:]):
        how = PORTFOLIO_AGGREGATION[name]
        col = per[:, j]
        out.append(float(col.max() if how == "max" else col.sum() if how == "sum" else col.mean()))
    return out


def build_panel(tables: CorpusTables, year: int, granularity: str = "yearly_portfolio",
                retire_window: int = 2, years: tuple[int, int] = ANALYSIS_YEARS) -> AnalysisPanel:
    """Assemble the aligned covariate / treatment / outcome matrices for one year."""
    if not years[0] <= year <= years[1]:
        raise ValueError(f"analysis year {year} outside [{years[0]}, {years[1]}]")
    history = PublicationHistory(tables.rows, tables.mentions, tables.horizon)
    treat = encode_treatments(tables.rows, tables.mentions, year, granularity)
    rows_by_unit: dict[str, list[AuthorPaperRow]] = defaultdict(list)
    for r in tables.rows:
        if r.year == year:
            key = r.author_id if granularity == "yearly_portfolio" else f"{r.author_id}|{r.paper_id}"
            rows_by_unit[key].append(r)

    ids, cov, trt, out = [], [], [], []
    for ta in treat:
        urows = rows_by_unit[ta.unit_id]
        author = urows[0].author_id
        stats = tables.network[(author, year)]
        cov.append(_author_covariates(stats) + _aggregate(urows))
        trt.append(ta.publish_on + ta.scientist_from)
        vals: list[float] = []
        for kind in OUTCOME_KINDS:
            for e in CANONICAL_ENTITIES:
                v = encode_outcome(history, author, e, year, kind, retire_window)
                vals.append(math.nan if v is None else float(v))
        vals.extend(math.nan if v is None else float(v) for v in encode_general_outcomes(history, author, year))
        ids.append(ta.unit_id)
        out.append(vals)
    n = len(ids)
    return AnalysisPanel(
        year=year,
        granularity=granularity,
        unit_ids=ids,
        covariates=np.array(cov, dtype=float).reshape(n, len(COVARIATES)),
        treatments=np.array(trt, dtype=np.int8).reshape(n, len(TREATMENT_COLUMNS)),
        outcomes=np.array(out, dtype=float).reshape(n, len(OUTCOME_COLUMNS)),
    )


PANEL_HEADER = ("unit_id",) + COVARIATES + TREATMENT_COLUMNS + OUTCOME_COLUMNS


def _fmt(v: float) -> str:
    if isinstance(v, float) and math.isnan(v):
        return ""
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def write_panel_csv(panel: AnalysisPanel, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PANEL_HEADER)
        for i, uid in enumerate(panel.unit_ids):
            w.writerow(
                [uid]
                + [_fmt(v) for v in panel.covariates[i].tolist()]
                + [str(int(v)) for v in panel.treatments[i]]
                + [_fmt(v) for v in panel.outcomes[i].tolist()]
            )


def read_panel_csv(path: Path, year: int, granularity: str) -> AnalysisPanel:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != PANEL_HEADER:
            raise ValueError(f"{path}: unexpected panel header")
        ids, cov, trt, out = [], [], [], []
        nc, nt = len(COVARIATES), len(TREATMENT_COLUMNS)
        for row in reader:
            ids.append(row[0])
            cov.append([float(v) for v in row[1 : 1 + nc]])
            trt.append([int(v) for v in row[1 + nc : 1 + nc + nt]])
            out.append([float(v) if v != "" else math.nan for v in row[1 + nc + nt :]])
    n = len(ids)
    return AnalysisPanel(year, granularity, ids,
                         np.array(cov, dtype=float).reshape(n, len(COVARIATES)),
                         np.array(trt, dtype=np.int8).reshape(n, len(TREATMENT_COLUMNS)),
                         np.array(out, dtype=float).reshape(n, len(OUTCOME_COLUMNS)))
