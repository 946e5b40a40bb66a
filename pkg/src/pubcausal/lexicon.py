"""Research-entity lexicon and longest-match entity detection."""
from __future__ import annotations

import csv
import re
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .corpus import PaperRecord

CANONICAL_ENTITIES = (
    "artificial intelligence",
    "adversarial",
    "annotation",
    "arabic",
    "attention",
    "baselines",
    "bidirectional lstm",
    "causal",
    "chinese",
    "classification",
    "coreference",
    "crowdsourcing",
    "deep learning",
    "dialog",
    "embeddings",
    "ethics",
    "explanation",
    "fairness",
    "french",
    "generative",
    "german",
    "grammars",
    "graph models",
    "heuristics",
    "interpretability",
    "language models",
    "lstm",
    "machine learning",
    "monolingual",
    "multilingual",
    "multiple languages",
    "NER",
    "node2vec",
    "non-English language",
    "pos/dependency/parsing",
    "QA",
    "reinforcement learning",
    "robustness",
    "russian",
    "sentiment",
    "statistical/probabilistic models",
    "summarization",
    "topic model",
    "transfer learning",
    "transformers",
    "translation",
    "transparency",
    "unsupervised methods",
    "word2vec",
    "benchmark",
)

DEFAULT_LEXICON_PATH = Path(__file__).parent / "data" / "default_lexicon.csv"


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class EntityLexicon:
    entries: Mapping[str, frozenset[str]]

    @property
    def entity_ids(self) -> tuple[str, ...]:
        return tuple(e for e in CANONICAL_ENTITIES if e in self.entries)

    def patterns(self) -> list[tuple[str, str]]:
        """All ``(pattern, entity_id)`` pairs in a stable order."""
        return sorted((p, e) for e, ps in self.entries.items() for p in ps)

    def with_pattern(self, entity_id: str, pattern: str) -> "EntityLexicon":
        entries = {e: set(ps) for e, ps in self.entries.items()}
        entries.setdefault(entity_id, set()).add(pattern.lower())
        return EntityLexicon({e: frozenset(ps) for e, ps in entries.items()})


@dataclass(frozen=True)
class EntityMentionSet:
    paper_id: str
    entities: frozenset[str]


def lexicon_from_rows(rows: Iterable[Sequence[str]], validate: bool = True) -> EntityLexicon:
    entries: dict[str, set[str]] = defaultdict(set)
    canonical = set(CANONICAL_ENTITIES)
    for lineno, row in enumerate(rows, start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 2:
            raise LexiconError(f"row {lineno}: expected 'entity_id,pattern', got {row!r}")
        entity_id, pattern = row[0].strip(), row[1].strip().lower()
        if validate and entity_id not in canonical:
            raise LexiconError(f"row {lineno}: unknown entity_id {entity_id!r}")
        if not pattern:
            raise LexiconError(f"row {lineno}: empty pattern for {entity_id!r}")
        entries[entity_id].add(pattern)
    if validate:
        missing = [e for e in CANONICAL_ENTITIES if e not in entries]
        if missing:
            raise LexiconError(f"missing canonical id(s): {', '.join(repr(m) for m in missing)}")
    return EntityLexicon({e: frozenset(ps) for e, ps in entries.items()})


def load_lexicon(path: Optional[Path] = None) -> EntityLexicon:
    """Load and validate an ``entity_id,pattern`` CSV (default: shipped lexicon)."""
    path = DEFAULT_LEXICON_PATH if path is None else Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["entity_id", "pattern"]:
            raise LexiconError(f"{path}: header must be 'entity_id,pattern'")
        return lexicon_from_rows(reader)


def _compile(pattern: str) -> re.Pattern:
    # lookahead capture so overlapping occurrences of one pattern are all found
    return re.compile(r"(?<![a-z0-9])(?=(" + re.escape(pattern) + r")(?![a-z0-9]))")


_COMPILED: dict[str, re.Pattern] = {}


def find_matches(text: str, lexicon: EntityLexicon) -> list[tuple[int, int, str]]:
    """All word-bounded pattern occurrences as ``(start, end, entity_id)``."""
    low = text.lower()
    out = []
    for pattern, entity in lexicon.patterns():
        if pattern not in low:  # cheap prefilter; the regex adds word boundaries
            continue
        rx = _COMPILED.get(pattern)
        if rx is None:
            rx = _COMPILED[pattern] = _compile(pattern)
        for m in rx.finditer(low):
            out.append((m.start(1), m.end(1), entity))
    return out


def select_longest(matches: Iterable[tuple[int, int, str]]) -> list[tuple[int, int, str]]:
    """Keep longest spans first; drop any span overlapping a kept one."""
    kept: list[tuple[int, int, str]] = []
    for s, e, ent in sorted(set(matches), key=lambda m: (-(m[1] - m[0]), m[0], m[2])):
        if all(e <= ks or s >= ke for ks, ke, _ in kept):
            kept.append((s, e, ent))
    return sorted(kept)


def match_entities(text: Optional[str], lexicon: EntityLexicon, paper_id: str = "") -> EntityMentionSet:
    if not text:
        return EntityMentionSet(paper_id, frozenset())
    spans = select_longest(find_matches(text, lexicon))
    return EntityMentionSet(paper_id, frozenset(ent for _, _, ent in spans))


def has_full_text(paper: PaperRecord) -> bool:
    return bool(paper.full_text and paper.full_text.strip())


def match_corpus(papers: Iterable[PaperRecord], lexicon: EntityLexicon) -> dict[str, EntityMentionSet]:
    return {
        p.paper_id: match_entities(p.full_text, lexicon, p.paper_id)
        for p in papers
        if has_full_text(p)
    }


def coverage_by_year(
    mention_sets: Mapping[str, EntityMentionSet], papers: Iterable[PaperRecord]
) -> list[tuple[int, float]]:
    """Percent of full-text papers per year with at least one entity."""
    totals: dict[int, int] = defaultdict(int)
    hits: dict[int, int] = defaultdict(int)
    for p in papers:
        if not has_full_text(p):
            continue
        totals[p.year] += 1
        ms = mention_sets.get(p.paper_id)
        if ms is not None and ms.entities:
            hits[p.year] += 1
    return [(y, 100.0 * hits[y] / totals[y]) for y in sorted(totals)]


def write_mentions_csv(mention_sets: Mapping[str, EntityMentionSet], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["paper_id", "entity_id"])
        for pid in sorted(mention_sets):
            for ent in sorted(mention_sets[pid].entities):
                w.writerow([pid, ent])


def read_mentions_csv(path: Path, paper_ids: Optional[Iterable[str]] = None) -> dict[str, EntityMentionSet]:
    """Read mentions; ``paper_ids`` seeds empty sets for entity-free full-text papers."""
    found: dict[str, set[str]] = {pid: set() for pid in (paper_ids or ())}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            found.setdefault(row["paper_id"], set()).add(row["entity_id"])
    return {pid: EntityMentionSet(pid, frozenset(ents)) for pid, ents in found.items()}
