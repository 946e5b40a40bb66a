"""Bibliography ingestion: entries -> paper records -> paper-author rows.

The parser handles the brace-delimited ``@type{key, field = value, ...}``
entry format, including nested braces, quoted values, ``#`` concatenation
and ``@string`` macros. Each entry is parsed in isolation, so a malformed
entry is reported and skipped without disturbing its neighbours.
"""
from __future__ import annotations

import csv
import io
import logging
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

LOGGER = logging.getLogger(__name__)

MIN_YEAR = 1965
MAX_YEAR = 2020

CONFERENCE_TYPES = frozenset({"inproceedings", "proceedings", "conference"})
JOURNAL_TYPES = frozenset({"article"})
IGNORED_TYPES = frozenset({"comment", "preamble", "string"})

ROW_COLUMNS = (
    "author_id",
    "paper_id",
    "year",
    "venue_kind",
    "n_authors",
    "page_length",
    "word_count",
    "fog_index",
    "country",
)

_ENTRY_START = re.compile(r"(?:^|\n)[ \t]*@", re.MULTILINE)
_PAGES = re.compile(r"^\s*(\d+)\s*(?:-{1,3}|\u2013|\u2014)\s*(\d+)\s*$")
_WS = re.compile(r"\s+")
_AND = re.compile(r"\s+and\s+", re.IGNORECASE)
_SENTENCE_END = re.compile(r"[.!?]+")
_VOWEL_GROUP = re.compile(r"[aeiouy]+")


class BibParseError(ValueError):
    """A single bibliography entry could not be parsed."""

    def __init__(self, offset: int, message: str):
        super().__init__(f"byte {offset}: {message}")
        self.offset = offset
        self.message = message


@dataclass(frozen=True)
class PaperRecord:
    paper_id: str
    title: str
    year: int
    venue_kind: str
    authors: tuple[str, ...]
    page_count: int = 0
    full_text: Optional[str] = None

    def __post_init__(self):
        if not self.authors:
            raise ValueError(f"{self.paper_id}: paper must have at least one author")
        if not MIN_YEAR <= self.year <= MAX_YEAR:
            raise ValueError(f"{self.paper_id}: year {self.year} outside [{MIN_YEAR}, {MAX_YEAR}]")
        if self.page_count < 0:
            raise ValueError(f"{self.paper_id}: negative page count")
        if self.venue_kind not in ("conference", "journal"):
            raise ValueError(f"{self.paper_id}: unknown venue kind {self.venue_kind!r}")


@dataclass(frozen=True)
class PaperFeatures:
    n_authors: int
    page_length: int
    word_count: int
    fog_index: float
    is_conference: int


@dataclass(frozen=True)
class AuthorPaperRow:
    author_id: str
    paper_id: str
    year: int
    venue_kind: str
    n_authors: int
    page_length: int
    word_count: int
    fog_index: float
    country: Optional[str] = None


@dataclass
class ParseReport:
    """Side channel for entries that were skipped or failed to parse."""

    errors: list[BibParseError] = field(default_factory=list)
    skipped: Counter = field(default_factory=Counter)


# ---------------------------------------------------------------------------
# Low-level entry parsing


def _skip_ws(text: str, i: int) -> int:
    while i < len(text) and text[i].isspace():
        i += 1
    return i


def _read_braced(text: str, i: int, base: int) -> tuple[str, int]:
    """Return the content of the brace group opening at ``text[i]``."""
    depth = 0
    j = i
    while j < len(text):
        c = text[j]
        if c == "\\":
            j += 2
            continue
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return text[i + 1 : j], j + 1
        j += 1
    raise BibParseError(base, "unbalanced braces")


def _read_quoted(text: str, i: int, base: int) -> tuple[str, int]:
    depth = 0
    for j in range(i + 1, len(text)):
        c = text[j]
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth < 0:
                raise BibParseError(base, "unbalanced braces in quoted value")
        elif c == '"' and depth == 0 and text[j - 1] != "\\":
            return text[i + 1 : j], j + 1
    raise BibParseError(base, "unterminated quoted value")


def _read_value(text: str, i: int, base: int, macros: Mapping[str, str]) -> tuple[str, int]:
    parts = []
    while True:
        i = _skip_ws(text, i)
        if i >= len(text):
            raise BibParseError(base, "unexpected end of entry")
        c = text[i]
        if c == "{":
            part, i = _read_braced(text, i, base)
        elif c == '"':
            part, i = _read_quoted(text, i, base)
        else:
            m = re.compile(r"[^\s,#}]+").match(text, i)
            if not m:
                raise BibParseError(base, f"unexpected character {c!r}")
            token = m.group(0)
            part = token if token.isdigit() else macros.get(token.lower(), token)
            i = m.end()
        parts.append(part)
        i = _skip_ws(text, i)
        if i < len(text) and text[i] == "#":
            i += 1
            continue
        return "".join(parts), i


def _check_balanced(body: str, base: int) -> None:
    depth = 0
    j = 0
    while j < len(body):
        c = body[j]
        if c == "\\":
            j += 2
            continue
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth < 0:
                raise BibParseError(base, "unbalanced braces")
        j += 1
    if depth != 0:
        raise BibParseError(base, "unbalanced braces")


def parse_entry(chunk: str, base: int = 0, macros: Optional[dict] = None):
    """Parse one ``@type{key, ...}`` chunk into ``(type, key, fields)``.

    ``@string`` entries update ``macros`` in place and return an empty key.
    """
    macros = {} if macros is None else macros
    m = re.compile(r"\s*@\s*([A-Za-z]+)\s*([{(])").match(chunk)
    if not m:
        raise BibParseError(base, "expected '@type{'")
    etype = m.group(1).lower()
    if etype in ("comment", "preamble"):
        return etype, "", {}
    open_ch = m.group(2)
    i = m.end()
    if open_ch == "{":
        body_end = chunk.rfind("}")
    else:
        body_end = chunk.rfind(")")
    if body_end < i:
        raise BibParseError(base, "unbalanced braces")
    body = chunk[i:body_end]
    _check_balanced(body, base)

    fields: dict[str, str] = {}
    j = 0
    key = ""
    if etype != "string":
        km = re.compile(r"\s*([^,\s]*)\s*,?").match(body)
        key = km.group(1)
        j = km.end()
    while True:
        j = _skip_ws(body, j)
        if j >= len(body):
            break
        fm = re.compile(r"([A-Za-z][\w\-:.]*)\s*=").match(body, j)
        if not fm:
            raise BibParseError(base + len(chunk[:i + j].encode("utf-8")), "expected field name")
        name = fm.group(1).lower()
        value, j = _read_value(body, fm.end(), base, macros)
        fields[name] = value
        j = _skip_ws(body, j)
        if j < len(body) and body[j] == ",":
            j += 1
    if etype == "string":
        macros.update(fields)
    return etype, key, fields


def clean_text(value: str) -> str:
    """Strip grouping braces and collapse whitespace."""
    value = value.replace("\\{", "\x00").replace("\\}", "\x01")
    value = value.replace("{", "").replace("}", "")
    value = value.replace("\x00", "{").replace("\x01", "}")
    return _WS.sub(" ", value).strip()


def split_authors(value: str) -> list[str]:
    """Split an author field on ``and`` at top brace depth.

    ``Last, First`` names are reordered to ``First Last``.
    """
    names, depth, start = [], 0, 0
    i = 0
    while i < len(value):
        c = value[i]
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
        elif depth == 0:
            m = _AND.match(value, i)
            if m and (i == 0 or value[i].isspace()):
                names.append(value[start:i])
                start = i = m.end()
                continue
        i += 1
    names.append(value[start:])
    out = []
    for raw in names:
        name = clean_text(raw)
        if not name:
            continue
        if "," in name:
            last, _, first = name.partition(",")
            name = f"{first.strip()} {last.strip()}".strip()
        out.append(name)
    return out


def page_count_from_field(pages: Optional[str]) -> int:
    if not pages:
        return 0
    m = _PAGES.match(pages)
    if not m:
        return 0
    first, last = int(m.group(1)), int(m.group(2))
    return last - first + 1 if last >= first else 0


def parse_bibliography(raw: bytes | str, report: Optional[ParseReport] = None) -> list[PaperRecord]:
    """Parse a bibliography byte stream into paper records.

    Entries without authors, without a usable year, or with an unsupported
    entry type are skipped and tallied in ``report.skipped``. Malformed
    entries land in ``report.errors`` with their byte offset.
    """
    report = ParseReport() if report is None else report
    text = raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw
    starts = [m.end() - 1 for m in _ENTRY_START.finditer(text)]
    macros: dict[str, str] = {}
    records: list[PaperRecord] = []
    seen: set[str] = set()
    offset, prev = 0, 0
    for n, s in enumerate(starts):
        e = starts[n + 1] if n + 1 < len(starts) else len(text)
        chunk = text[s:e]
        offset += len(text[prev:s].encode("utf-8"))
        prev = s
        try:
            etype, key, fields = parse_entry(chunk, offset, macros)
        except BibParseError as exc:
            LOGGER.warning("skipping malformed entry: %s", exc)
            report.errors.append(exc)
            continue
        if etype in IGNORED_TYPES:
            continue
        authors = split_authors(fields.get("author", ""))
        if not authors:
            report.skipped["no_author"] += 1
            continue
        year_raw = clean_text(fields.get("year", ""))
        if not year_raw.isdigit():
            report.skipped["no_year"] += 1
            continue
        year = int(year_raw)
        if not MIN_YEAR <= year <= MAX_YEAR:
            report.skipped["year_out_of_range"] += 1
            continue
        if etype in CONFERENCE_TYPES:
            venue = "conference"
        elif etype in JOURNAL_TYPES:
            venue = "journal"
        else:
            report.skipped["unsupported_type"] += 1
            continue
        if key in seen:
            report.skipped["duplicate_key"] += 1
            continue
        seen.add(key)
        records.append(
            PaperRecord(
                paper_id=key,
                title=clean_text(fields.get("title", "")),
                year=year,
                venue_kind=venue,
                authors=tuple(authors),
                page_count=page_count_from_field(fields.get("pages")),
            )
        )
    return records


def format_entry(record: PaperRecord) -> str:
    """Serialize a record back into a bibliography entry."""
    etype = "inproceedings" if record.venue_kind == "conference" else "article"
    lines = [f"@{etype}{{{record.paper_id},"]
    lines.append(f"    title = {{{record.title}}},")
    lines.append(f"    author = {{{' and '.join(record.authors)}}},")
    lines.append(f"    year = {{{record.year}}},")
    if record.page_count > 0:
        lines.append(f"    pages = {{1--{record.page_count}}},")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Authors and rows


def normalize_author(name: str) -> str:
    """Case-fold, strip diacritics and collapse whitespace."""
    decomposed = unicodedata.normalize("NFKD", name)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    return _WS.sub(" ", stripped.casefold()).strip()


def attach_full_texts(papers: Iterable[PaperRecord], texts_dir: Optional[Path]) -> list[PaperRecord]:
    """Return copies of ``papers`` carrying ``<texts_dir>/<paper_id>.txt`` contents."""
    papers = list(papers)
    if texts_dir is None:
        return papers
    texts_dir = Path(texts_dir)
    out = []
    for p in papers:
        path = texts_dir / f"{p.paper_id}.txt"
        if path.is_file():
            text = path.read_text(encoding="utf-8")
            p = PaperRecord(p.paper_id, p.title, p.year, p.venue_kind, p.authors, p.page_count, text)
        out.append(p)
    return out


def read_country_table(path: Path) -> dict[tuple[str, int], str]:
    """Read the ``author_id,year,country`` sidecar."""
    table = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            table[(normalize_author(row["author_id"]), int(row["year"]))] = row["country"].strip()
    return table


def expand_author_rows(
    papers: Sequence[PaperRecord],
    countries: Optional[Mapping[tuple[str, int], str]] = None,
) -> list[AuthorPaperRow]:
    """One row per (author, paper), in paper order then author order."""
    countries = countries or {}
    by_author: dict[str, list[int]] = {}
    for a, y in countries:
        by_author.setdefault(a, []).append(y)
    rows = []
    for paper in papers:
        feats = compute_paper_features(paper)
        seen = set()
        for name in paper.authors:
            aid = normalize_author(name)
            if aid in seen:
                LOGGER.warning("duplicate author %r in paper %s; keeping one row", name, paper.paper_id)
                continue
            seen.add(aid)
            country = countries.get((aid, paper.year))
            if country is None and aid in by_author:
                earlier = [y for y in by_author[aid] if y < paper.year]
                if earlier:
                    country = countries[(aid, max(earlier))]
            rows.append(
                AuthorPaperRow(
                    author_id=aid,
                    paper_id=paper.paper_id,
                    year=paper.year,
                    venue_kind=paper.venue_kind,
                    n_authors=feats.n_authors,
                    page_length=feats.page_length,
                    word_count=feats.word_count,
                    fog_index=feats.fog_index,
                    country=country,
                )
            )
    return rows


# ---------------------------------------------------------------------------
# Text statistics


@lru_cache(maxsize=65536)
def count_syllables(word: str) -> int:
    """Vowel-group count with a trailing silent-e correction; at least 1."""
    w = "".join(c for c in word.lower() if c.isalpha())
    if not w:
        return 0
    n = len(_VOWEL_GROUP.findall(w))
    if n > 1 and w.endswith("e") and not w.endswith(("ee", "ye")):
        if not (w.endswith("le") and len(w) > 2 and w[-3] not in "aeiouy"):
            n -= 1
    return max(n, 1)


def _words(text: str) -> list[str]:
    return [t for t in text.split() if any(c.isalpha() for c in t)]


def gunning_fog(text: Optional[str]) -> float:
    """Gunning fog index: 0.4 * (words/sentences + 100 * complex/words)."""
    if not text or not text.strip():
        return 0.0
    words = _words(text)
    if not words:
        return 0.0
    sentences = max(len(_SENTENCE_END.findall(text)), 1)
    complex_words = sum(1 for w in words if count_syllables(w) >= 3)
    return 0.4 * (len(words) / sentences + 100.0 * complex_words / len(words))


def compute_paper_features(record: PaperRecord) -> PaperFeatures:
    text = record.full_text or ""
    return PaperFeatures(
        n_authors=len(record.authors),
        page_length=record.page_count,
        word_count=len(text.split()),
        fog_index=gunning_fog(text),
        is_conference=int(record.venue_kind == "conference"),
    )


# ---------------------------------------------------------------------------
# Row table IO


def _fmt_float(x: float) -> str:
    return repr(float(x))


def write_rows_csv(rows: Iterable[AuthorPaperRow], path_or_buf) -> None:
    own = isinstance(path_or_buf, (str, Path))
    fh = open(path_or_buf, "w", newline="", encoding="utf-8") if own else path_or_buf
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROW_COLUMNS)
        for r in rows:
            w.writerow(
                [
                    r.author_id,
                    r.paper_id,
                    r.year,
                    r.venue_kind,
                    r.n_authors,
                    r.page_length,
                    r.word_count,
                    _fmt_float(r.fog_index),
                    r.country or "",
                ]
            )
    finally:
        if own:
            fh.close()


def read_rows_csv(path_or_buf) -> list[AuthorPaperRow]:
    own = isinstance(path_or_buf, (str, Path))
    fh = open(path_or_buf, newline="", encoding="utf-8") if own else path_or_buf
    try:
        reader = csv.DictReader(fh)
        return [
            AuthorPaperRow(
                author_id=d["author_id"],
                paper_id=d["paper_id"],
                year=int(d["year"]),
                venue_kind=d["venue_kind"],
                n_authors=int(d["n_authors"]),
                page_length=int(d["page_length"]),
                word_count=int(d["word_count"]),
                fog_index=float(d["fog_index"]),
                country=d["country"] or None,
            )
            for d in reader
        ]
    finally:
        if own:
            fh.close()


def rows_to_csv_text(rows: Iterable[AuthorPaperRow]) -> str:
    buf = io.StringIO()
    write_rows_csv(rows, buf)
    return buf.getvalue()
