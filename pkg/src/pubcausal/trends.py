"""Temporal summaries over yearly graphs and estimates, plus CSV/SVG reports."""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence
from xml.sax.saxutils import escape

from .discovery.graphs import EnsembleGraph
from .effects.base import AteEstimate
from .effects.combine import DEFAULT_MEAN_METHODS, format_cell, mean_across_methods
from .lexicon import CANONICAL_ENTITIES
from .panel import ANALYSIS_YEARS, PublicationHistory

YEARS = tuple(range(ANALYSIS_YEARS[0], ANALYSIS_YEARS[1] + 1))
NON_ENGLISH = ("arabic", "chinese", "french", "german", "russian", "non-English language")
METHOD_LABELS = {"naive": "Naive", "psm": "PSM", "causal_forest": "CF", "vaine": "VAINE"}

EdgeFilter = Callable[[str, str], bool]


def entity_family(kind: str, entities: Sequence[str] = CANONICAL_ENTITIES) -> list[tuple[str, str]]:
    """``(publish_on:x, kind:x)`` pairs, one per entity."""
    return [(f"publish_on:{e}", f"{kind}:{e}") for e in entities]


def edge_present(graph: EnsembleGraph, cause: str, effect: str, threshold: float = 0.5) -> bool:
    """Weight at or above ``threshold`` and not oriented ``effect -> cause``."""
    if graph.weight(cause, effect) < threshold:
        return False
    return graph.orientation(cause, effect) in ("->", "--")


@dataclass
class PersistenceGrid:
    years: tuple[int, ...]
    rows: list[tuple[str, str]] = field(default_factory=list)
    cells: dict[tuple[str, str], tuple[int, ...]] = field(default_factory=dict)

    def total(self, row: tuple[str, str]) -> int:
        return sum(self.cells[row])

    def years_present(self, row: tuple[str, str]) -> list[int]:
        return [y for y, c in zip(self.years, self.cells[row]) if c]


def persistence_grid(graphs: Mapping[int, EnsembleGraph], pairs: Iterable[tuple[str, str]],
                     threshold: float = 0.5, years: Sequence[int] = YEARS) -> PersistenceGrid:
    """Edge-presence grid over ``years``; rows never present are omitted."""
    grid = PersistenceGrid(tuple(years))
    for cause, effect in pairs:
        cells = tuple(
            int(y in graphs and edge_present(graphs[y], cause, effect, threshold)) for y in years
        )
        if any(cells):
            grid.rows.append((cause, effect))
            grid.cells[(cause, effect)] = cells
    return grid


def _directed(a: str, b: str, orientation: str) -> tuple[str, str]:
    return (b, a) if orientation == "<-" else (a, b)


def recurrent_edges(graphs: Mapping[int, EnsembleGraph], min_years: int = 2, threshold: float = 0.5,
                    edge_filter: Optional[EdgeFilter] = None) -> list[tuple[str, str, list[int]]]:
    """Edges present in at least ``min_years`` yearly graphs.

    Direction comes from each year's orientation; undirected edges keep the
    sorted name order.
    """
    seen: dict[tuple[str, str], list[int]] = {}
    for year in sorted(graphs):
        for (a, b), (w, o) in graphs[year].edges.items():
            if w < threshold:
                continue
            key = _directed(a, b, o)
            if edge_filter is not None and not edge_filter(*key):
                continue
            seen.setdefault(key, []).append(year)
    return [(c, e, ys) for (c, e), ys in sorted(seen.items()) if len(ys) >= min_years]


def _entity_of(name: str) -> str:
    return name.split(":", 1)[1] if ":" in name else name


@dataclass(frozen=True)
class OverlapSummary:
    set_retire: frozenset[str]
    set_maintain: frozenset[str]

    @property
    def retire_only(self) -> frozenset[str]:
        return self.set_retire - self.set_maintain

    @property
    def maintain_only(self) -> frozenset[str]:
        return self.set_maintain - self.set_retire

    @property
    def both(self) -> frozenset[str]:
        return self.set_retire & self.set_maintain

    def partitions(self) -> dict[str, frozenset[str]]:
        return {"retire_only": self.retire_only, "maintain_only": self.maintain_only, "both": self.both}


def overlap_summary(retire: PersistenceGrid, maintain: PersistenceGrid) -> OverlapSummary:
    return OverlapSummary(
        frozenset(_entity_of(c) for c, _ in retire.rows),
        frozenset(_entity_of(c) for c, _ in maintain.rows),
    )


def persistence_pct(history: PublicationHistory, entity_group: Iterable[str], year: int) -> float:
    """Percent of the year's group publishers who publish on the group again next year.

    NaN when nobody published on the group in ``year``.
    """
    group = tuple(entity_group)
    if year + 1 > history.horizon:
        raise ValueError(f"history ends at {history.horizon}, need {year + 1}")
    base = [a for a in history.authors_in(year) if history.published_any(a, group, year)]
    if not base:
        return math.nan
    cont = sum(1 for a in base if history.published_any(a, group, year + 1))
    return 100.0 * cont / len(base)


@dataclass
class EffectTimeSeries:
    treatment: str
    outcome: str
    years: tuple[int, ...]
    values: dict[str, dict[int, float]]
    mean_methods: tuple[str, ...] = DEFAULT_MEAN_METHODS

    @property
    def mean(self) -> dict[int, float]:
        return {
            y: mean_across_methods([self.values.get(m, {}).get(y, math.nan) for m in self.mean_methods], None)
            for y in self.years
        }


def effect_time_series(estimates: Iterable[AteEstimate], treatment: str, outcome: str,
                       methods: Sequence[str] = ("causal_forest", "vaine"),
                       years: Sequence[int] = YEARS,
                       mean_methods: Sequence[str] = DEFAULT_MEAN_METHODS) -> EffectTimeSeries:
    values: dict[str, dict[int, float]] = {m: {y: math.nan for y in years} for m in methods}
    for e in estimates:
        if e.treatment == treatment and e.outcome == outcome and e.method in values and e.year in values[e.method]:
            values[e.method][e.year] = e.estimate if e.defined else math.nan
    return EffectTimeSeries(treatment, outcome, tuple(years), values, tuple(mean_methods))


# rendering --------------------------------------------------------------

def year_range(years: Sequence[int]) -> str:
    return f"{min(years)}-{max(years)}" if years else "none"


def slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def grid_csv(grid: PersistenceGrid) -> str:
    return _csv_text(["cause", "effect", *map(str, grid.years), "total"],
                     ([c, e, *grid.cells[(c, e)], grid.total((c, e))] for c, e in grid.rows))


def overlap_csv(summary: OverlapSummary) -> str:
    rows = [(name, ent) for name, ents in summary.partitions().items() for ent in sorted(ents)]
    return _csv_text(["partition", "entity"], rows)


def series_csv(series: EffectTimeSeries) -> str:
    rows = []
    for m, vals in series.values.items():
        rows.append([METHOD_LABELS.get(m, m), *(format_cell(vals[y]) for y in series.years)])
    mean = series.mean
    rows.append(["Mean", *(format_cell(mean[y]) for y in series.years)])
    return _csv_text(["method", *map(str, series.years)], rows)


def pct_csv(values: Mapping[int, float]) -> str:
    return _csv_text(["year", "percent"],
                     ([y, "" if math.isnan(v) else repr(v)] for y, v in sorted(values.items())))


def effect_color(value: float) -> str:
    """Diverging fill: red family above zero, blue below, saturating at |value| = 1."""
    if value is None or math.isnan(value):
        return "#ffffff"
    i = min(abs(value), 1.0)
    fade = round(255 * (1.0 - i))
    if value >= 0:
        return f"#ff{fade:02x}{fade:02x}"
    return f"#{fade:02x}{fade:02x}ff"


def _svg(width: int, height: int, body: list[str]) -> str:
    head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">\n')
    return head + "".join(f"  {line}\n" for line in body) + "</svg>\n"


_CELL, _LABEL_W, _TOP = 28, 260, 24


def grid_svg(grid: PersistenceGrid, title: str = "") -> str:
    body = [f'<text x="4" y="14">{escape(title)}</text>']
    for j, y in enumerate(grid.years):
        body.append(f'<text x="{_LABEL_W + j * _CELL + 2}" y="{_TOP - 4}">{str(y)[-2:]}</text>')
    total_x = _LABEL_W + len(grid.years) * _CELL + 6
    body.append(f'<text x="{total_x}" y="{_TOP - 4}">Total</text>')
    for i, row in enumerate(grid.rows):
        ty = _TOP + i * _CELL
        body.append(f'<text x="4" y="{ty + 18}">{escape(f"{row[0]} -> {row[1]}")}</text>')
        for j, c in enumerate(grid.cells[row]):
            fill = "#4d4d4d" if c else "#ffffff"
            body.append(f'<rect class="cell" x="{_LABEL_W + j * _CELL}" y="{ty}" width="{_CELL}" '
                        f'height="{_CELL}" fill="{fill}" stroke="#999999"/>')
        body.append(f'<text x="{total_x}" y="{ty + 18}">{grid.total(row)}</text>')
    width = total_x + 50
    height = _TOP + len(grid.rows) * _CELL + 8
    return _svg(width, height, body)


def series_svg(series: EffectTimeSeries) -> str:
    labels = [METHOD_LABELS.get(m, m) for m in series.values] + ["Mean"]
    rows = [list(v[y] for y in series.years) for v in series.values.values()]
    mean = series.mean
    rows.append([mean[y] for y in series.years])
    cw, lw = 48, 80
    body = [f'<text x="4" y="14">{escape(f"{series.treatment} -> {series.outcome}")}</text>']
    for j, y in enumerate(series.years):
        body.append(f'<text x="{lw + j * cw + 8}" y="{_TOP - 4}">{y}</text>')
    for i, (label, vals) in enumerate(zip(labels, rows)):
        ty = _TOP + i * _CELL
        body.append(f'<text x="4" y="{ty + 18}">{escape(label)}</text>')
        for j, v in enumerate(vals):
            body.append(f'<rect class="cell" x="{lw + j * cw}" y="{ty}" width="{cw}" height="{_CELL}" '
                        f'fill="{effect_color(v)}" stroke="#999999"/>')
            body.append(f'<text x="{lw + j * cw + 10}" y="{ty + 18}">{format_cell(v)}</text>')
    return _svg(lw + len(series.years) * cw + 8, _TOP + len(rows) * _CELL + 8, body)


def pct_svg(values: Mapping[int, float], title: str = "") -> str:
    bw, h, base = 40, 160, 190
    items = sorted(values.items())
    body = [f'<text x="4" y="14">{escape(title)}</text>']
    for j, (y, v) in enumerate(items):
        v = 0.0 if math.isnan(v) else v
        bh = round(h * v / 100.0, 3)
        x = 10 + j * (bw + 10)
        body.append(f'<rect class="bar" x="{x}" y="{round(base - bh, 3)}" width="{bw}" height="{bh}" fill="#4d4d4d"/>')
        body.append(f'<text x="{x}" y="{base + 14}">{y}</text>')
        body.append(f'<text x="{x}" y="{round(base - bh - 4, 3)}">{v:.2f}</text>')
    return _svg(20 + len(items) * (bw + 10), base + 24, body)


@dataclass
class ReportInputs:
    grids: dict[str, PersistenceGrid] = field(default_factory=dict)
    overlap: Optional[OverlapSummary] = None
    series: list[EffectTimeSeries] = field(default_factory=list)
    persistence: dict[int, float] = field(default_factory=dict)
    years: tuple[int, ...] = YEARS


def render_reports(inputs: ReportInputs, out_dir: Path) -> list[Path]:
    """Write every report as ``{report}_{year_range}.{ext}``; returns the paths in write order."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    yr = year_range(inputs.years)
    written: list[Path] = []

    def put(name: str, ext: str, text: str) -> None:
        path = out_dir / f"{name}_{yr}.{ext}"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        written.append(path)

    for kind, grid in sorted(inputs.grids.items()):
        put(f"persistence_{kind}", "csv", grid_csv(grid))
        put(f"persistence_{kind}", "svg", grid_svg(grid, f"publish on x -> {kind} x"))
    if inputs.overlap is not None:
        put("overlap", "csv", overlap_csv(inputs.overlap))
    for s in inputs.series:
        name = f"effects_{slug(s.treatment)}__{slug(s.outcome)}"
        put(name, "csv", series_csv(s))
        put(name, "svg", series_svg(s))
    put("persistence_pct", "csv", pct_csv(inputs.persistence))
    put("persistence_pct", "svg", pct_svg(inputs.persistence, "authors continuing on non-English languages (%)"))
    return written
