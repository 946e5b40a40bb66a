"""Synthetic bibliographic corpora with planted causal dynamics.

Each author enters in some year, writes one solo paper per active year
(which carries all of the author's entity mentions) plus occasional
co-authored papers with filler text, and leaves the field with a yearly
hazard. Planted "retire" effects raise that hazard when the author
publishes on the treatment entity, which makes the naive effect of the
treatment on ``retire:<outcome entity>`` computable in closed form.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import MAX_YEAR, MIN_YEAR, PaperRecord, format_entry
from .lexicon import CANONICAL_ENTITIES, EntityLexicon, find_matches, load_lexicon

# words chosen to stay clear of every lexicon pattern
FILLER = (
    "we", "study", "the", "problem", "of", "estimating", "structure", "from", "observed", "corpora",
    "our", "approach", "combines", "several", "simple", "ideas", "results", "show", "clear", "gains",
    "across", "tasks", "and", "settings", "this", "paper", "describes", "experiments", "on", "three",
    "datasets", "with", "careful", "analysis", "errors", "remain", "frequent", "for", "rare", "inputs",
    "further", "work", "will", "examine", "additional", "variants", "considerable", "improvement",
    "particularly", "interesting", "observation", "systematically", "evaluated", "comprehensive",
)

MENTION_TEMPLATES = {
    "bidirectional lstm": "a bidirectional lstm encoder",
    "lstm": "an lstm decoder",
    "transparency": "notes on transparency",
    "attention": "an attention layer",
    "transformers": "pretrained transformers",
    "multilingual": "a multilingual setting",
    "arabic": "arabic text",
    "chinese": "chinese text",
    "german": "german text",
}

COUNTRY_WEIGHTS = (("US", 0.35), ("China", 0.25), ("Germany", 0.1), ("Japan", 0.08), ("France", 0.07), ("India", 0.15))


class InfeasibleSpecError(ValueError):
    pass


@dataclass(frozen=True)
class EntityDynamics:
    """``adoption``: yearly use probability before first use; ``retention`` afterwards."""

    adoption: float
    retention: float


@dataclass(frozen=True)
class PlantedEffect:
    treatment: str
    outcome: str
    tau: float
    kind: str = "retire"
    treat_prob: float = 0.2
    outcome_usage: float = 0.9


def _default_background() -> dict[str, EntityDynamics]:
    return {
        "transparency": EntityDynamics(0.08, 0.0),
        "attention": EntityDynamics(0.10, 0.6),
        "transformers": EntityDynamics(0.06, 0.7),
        "multilingual": EntityDynamics(0.08, 0.5),
        "arabic": EntityDynamics(0.06, 0.3),
        "chinese": EntityDynamics(0.06, 0.3),
        "german": EntityDynamics(0.05, 0.2),
    }


def _default_effects() -> list[PlantedEffect]:
    return [PlantedEffect("bidirectional lstm", "lstm", 0.8)]


@dataclass
class SyntheticCorpusSpec:
    n_authors: int = 4000
    first_year: int = 2008
    last_year: int = 2020
    background: dict[str, EntityDynamics] = field(default_factory=_default_background)
    effects: list[PlantedEffect] = field(default_factory=_default_effects)
    base_leave: float = 0.05
    collab_rate: float = 0.6
    filler_words: tuple[int, int] = (60, 140)
    seed: Optional[int] = 0

    def validate(self) -> None:
        if self.seed is None:
            raise InfeasibleSpecError("seed is required")
        if self.n_authors < 0:
            raise InfeasibleSpecError("n_authors must be non-negative")
        if not MIN_YEAR <= self.first_year <= self.last_year <= MAX_YEAR:
            raise InfeasibleSpecError("year span must lie inside the ingest range")
        for name, d in self.background.items():
            if name not in CANONICAL_ENTITIES:
                raise InfeasibleSpecError(f"unknown entity {name!r}")
            for p in (d.adoption, d.retention):
                if not 0.0 <= p <= 1.0:
                    raise InfeasibleSpecError(f"{name}: probabilities must lie in [0, 1]")
        planted = set()
        for e in self.effects:
            if e.kind != "retire":
                raise InfeasibleSpecError(f"only retire effects can be planted, got {e.kind!r}")
            for name in (e.treatment, e.outcome):
                if name not in CANONICAL_ENTITIES:
                    raise InfeasibleSpecError(f"unknown entity {name!r}")
                if name in self.background:
                    raise InfeasibleSpecError(f"{name!r} is both planted and background")
            planted |= {e.treatment, e.outcome}
            for p in (e.treat_prob, e.outcome_usage):
                if not 0.0 <= p <= 1.0:
                    raise InfeasibleSpecError("probabilities must lie in [0, 1]")
        hi = self.base_leave + sum(max(e.tau, 0.0) for e in self.effects)
        lo = self.base_leave + sum(min(e.tau, 0.0) for e in self.effects)
        if not (0.0 <= lo and hi <= 1.0):
            raise InfeasibleSpecError(
                f"leave hazard range [{lo:.3f}, {hi:.3f}] leaves [0, 1]; reduce |tau| or base_leave"
            )

    def expected_naive_ate(self, effect: PlantedEffect) -> float:
        """Expected naive effect of the treatment on ``retire:<outcome>``.

        A treated author leaves with extra probability ``tau`` and then
        retires the outcome entity for sure; an author who stays retires it
        only by skipping it next year and again the year after (or leaving
        then).
        """
        rho = effect.outcome_usage
        h_bar = self.base_leave + sum(e.tau * e.treat_prob for e in self.effects)
        H = h_bar + (1.0 - h_bar) * (1.0 - rho)
        return effect.tau * (1.0 - (1.0 - rho) * H)


def _author_name(i: int) -> str:
    letters = ""
    k = i
    for _ in range(4):
        letters = chr(ord("a") + k % 26) + letters
        k //= 26
    return f"Syn {letters.capitalize()}"


def _text(rng: np.random.Generator, mentions: list[str], lo: int, hi: int) -> str:
    words = list(rng.choice(FILLER, size=int(rng.integers(lo, hi + 1))))
    sentences, cur = [], []
    for w in words:
        cur.append(str(w))
        if len(cur) >= 9 and rng.random() < 0.3:
            sentences.append(" ".join(cur))
            cur = []
    if cur:
        sentences.append(" ".join(cur))
    for m in mentions:
        pos = int(rng.integers(0, len(sentences) + 1))
        sentences.insert(pos, f"we use {MENTION_TEMPLATES.get(m, m)}")
    return ". ".join(s[0].upper() + s[1:] for s in sentences) + ".\n"


@dataclass
class SyntheticCorpus:
    papers: list[PaperRecord]
    countries: list[tuple[str, int, str]]
    truth: dict


def generate(spec: SyntheticCorpusSpec) -> SyntheticCorpus:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    years = list(range(spec.first_year, spec.last_year + 1))
    entry_years = [y for y in years if y <= max(spec.first_year, spec.last_year - 2)]
    entries = rng.choice(entry_years, size=spec.n_authors) if spec.n_authors else np.array([], dtype=int)
    weights = np.array([w for _, w in COUNTRY_WEIGHTS])
    country_idx = rng.choice(len(COUNTRY_WEIGHTS), size=spec.n_authors, p=weights / weights.sum())
    names = [_author_name(i) for i in range(spec.n_authors)]
    active = np.zeros(spec.n_authors, dtype=bool)
    left = np.zeros(spec.n_authors, dtype=bool)
    ever: list[set[str]] = [set() for _ in range(spec.n_authors)]
    papers: list[PaperRecord] = []
    countries = [(names[i], int(entries[i]), COUNTRY_WEIGHTS[country_idx[i]][0]) for i in range(spec.n_authors)]
    lo, hi = spec.filler_words
    counter = 0

    def add_paper(authors, year, mentions):
        nonlocal counter
        counter += 1
        pid = f"syn{year}-{counter:06d}"
        kind = "conference" if rng.random() < 0.8 else "journal"
        pages = int(rng.integers(4, 13))
        text = _text(rng, mentions, lo, hi)
        papers.append(PaperRecord(pid, f"Synthetic study {counter}", year, kind, tuple(authors), pages, text))

    for year in years:
        active |= (entries == year) & ~left
        ids = np.flatnonzero(active)
        leaving = np.zeros(spec.n_authors, dtype=bool)
        for i in ids:
            mentions = []
            hazard = spec.base_leave
            first = entries[i] == year
            for e in spec.effects:
                if rng.random() < e.treat_prob:
                    mentions.append(e.treatment)
                    hazard += e.tau
                if first or rng.random() < e.outcome_usage:
                    mentions.append(e.outcome)
            for name, d in spec.background.items():
                p = d.retention if name in ever[i] else d.adoption
                if rng.random() < p:
                    mentions.append(name)
            mentions = sorted(set(mentions), key=lambda m: (CANONICAL_ENTITIES.index(m), m))
            ever[i].update(mentions)
            add_paper([names[i]], year, mentions)
            leaving[i] = rng.random() < hazard
        n_collab = int(round(spec.collab_rate * len(ids) / 2))
        for _ in range(n_collab if len(ids) >= 2 else 0):
            k = int(rng.integers(2, min(4, len(ids)) + 1))
            members = rng.choice(ids, size=k, replace=False)
            add_paper([names[j] for j in sorted(members)], year, [])
        left |= leaving
        active &= ~leaving
    truth = {
        "spec": asdict(spec),
        "expected_naive_ate": {
            f"publish_on:{e.treatment}->retire:{e.outcome}": spec.expected_naive_ate(e) for e in spec.effects
        },
        "retire_only": sorted(n for n, d in spec.background.items() if d.retention == 0.0),
    }
    return SyntheticCorpus(papers, countries, truth)


def check_filler(lexicon: Optional[EntityLexicon] = None) -> list[str]:
    """Filler words that would trigger a lexicon match (expected empty)."""
    lexicon = lexicon or load_lexicon()
    return [w for w in FILLER if find_matches(w, lexicon)]


def write_corpus(corpus: SyntheticCorpus, out_dir: Path) -> dict[str, Path]:
    """Write ``corpus.bib``, ``texts/<id>.txt``, ``countries.csv`` and ``truth.json``."""
    out_dir = Path(out_dir)
    texts = out_dir / "texts"
    texts.mkdir(parents=True, exist_ok=True)
    bib = out_dir / "corpus.bib"
    with open(bib, "w", encoding="utf-8", newline="\n") as fh:
        for p in corpus.papers:
            fh.write(format_entry(p))
            fh.write("\n")
    for p in corpus.papers:
        with open(texts / f"{p.paper_id}.txt", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(p.full_text or "")
    countries = out_dir / "countries.csv"
    with open(countries, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["author_id", "year", "country"])
        for row in corpus.countries:
            w.writerow(row)
    truth = out_dir / "truth.json"
    truth.write_text(json.dumps(corpus.truth, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {"bib": bib, "texts": texts, "countries": countries, "truth": truth}


def generate_synthetic_corpus(spec: SyntheticCorpusSpec, out_dir: Path) -> dict[str, Path]:
    return write_corpus(generate(spec), out_dir)


def spec_from_dict(doc: dict) -> SyntheticCorpusSpec:
    doc = dict(doc)
    if "background" in doc:
        doc["background"] = {k: EntityDynamics(**v) for k, v in doc["background"].items()}
    if "effects" in doc:
        doc["effects"] = [PlantedEffect(**e) for e in doc["effects"]]
    if "filler_words" in doc:
        doc["filler_words"] = tuple(doc["filler_words"])
    return SyntheticCorpusSpec(**doc)

