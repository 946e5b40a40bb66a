"""Stage functions over an output directory, plus the end-to-end runner.

Every stage reads only the declared files of earlier stages (or the
configured inputs) and writes its own files, so any stage can be rerun in
isolation.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np

from . import __version__, kernels
from .config import PipelineConfig
from .corpus import (ParseReport, attach_full_texts, expand_author_rows, parse_bibliography,
                     read_country_table, read_rows_csv, write_rows_csv)
from .discovery.graphs import EnsembleGraph
from .discovery.runner import discover_panel
from .effects.base import ESTIMATE_COLUMNS, AteEstimate, naive_ate
from .effects.forest import causal_forest_ate
from .effects.psm import psm_ate
from .effects.vaine import vaine_ate
from .lexicon import (LexiconError, coverage_by_year, load_lexicon, match_corpus, read_mentions_csv,
                      write_mentions_csv)
from .network import network_features, read_network_csv, write_network_csv
from .panel import CorpusTables, PublicationHistory, build_panel, read_panel_csv, write_panel_csv
from .seeding import derive_int
from .trends import (EffectTimeSeries, OverlapSummary, PersistenceGrid, ReportInputs, effect_time_series,
                     entity_family, overlap_summary, persistence_grid, persistence_pct, recurrent_edges,
                     render_reports, year_range)

LOGGER = logging.getLogger(__name__)

STAGES = ("ingest", "entities", "network", "panel", "discover", "estimate", "trends", "report")
THREADS_ENV = "PUBCAUSAL_THREADS"

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_STAGE = 0, 2, 3, 4


class DataError(RuntimeError):
    """Unreadable or invalid input data."""


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def n_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _pmap(fn: Callable, items: list) -> list:
    """Order-preserving map; parallel when the thread override asks for it."""
    k = n_threads()
    if k == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as ex:
        return list(ex.map(fn, items))


@dataclass(frozen=True)
class Layout:
    root: Path

    @property
    def rows(self) -> Path:
        return self.root / "rows.csv"

    @property
    def parse_report(self) -> Path:
        return self.root / "parse_report.json"

    @property
    def mentions(self) -> Path:
        return self.root / "mentions.csv"

    @property
    def coverage(self) -> Path:
        return self.root / "coverage.csv"

    @property
    def network(self) -> Path:
        return self.root / "network.csv"

    def panel(self, year: int) -> Path:
        return self.root / f"panel_{year}.csv"

    def graph(self, year: int) -> Path:
        return self.root / f"graph_{year}.json"

    @property
    def estimates(self) -> Path:
        return self.root / "estimates.csv"

    @property
    def diagnostics(self) -> Path:
        return self.root / "estimates_diagnostics.json"

    @property
    def trends(self) -> Path:
        return self.root / "trends.json"

    @property
    def reports(self) -> Path:
        return self.root / "reports"

    @property
    def manifest(self) -> Path:
        return self.root / "manifest.json"


def _need(path: Optional[str], what: str) -> Path:
    if not path:
        raise DataError(f"no {what} configured")
    p = Path(path)
    if not p.exists():
        raise DataError(f"{what} not found: {p}")
    return p


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


def _load_papers(cfg: PipelineConfig, report: Optional[ParseReport] = None):
    bib = _need(cfg.inputs.bib, "bibliography")
    papers = parse_bibliography(bib.read_bytes(), report)
    texts = Path(cfg.inputs.texts) if cfg.inputs.texts else None
    if texts is not None and not texts.is_dir():
        raise DataError(f"texts directory not found: {texts}")
    return attach_full_texts(papers, texts)


# stages -------------------------------------------------------------------

def stage_ingest(cfg: PipelineConfig, out: Layout) -> None:
    report = ParseReport()
    papers = _load_papers(cfg, report)
    countries = read_country_table(_need(cfg.inputs.countries, "country table")) if cfg.inputs.countries else {}
    rows = expand_author_rows(papers, countries)
    write_rows_csv(rows, out.rows)
    _write_json(out.parse_report, {
        "papers": len(papers),
        "rows": len(rows),
        "skipped": dict(sorted(report.skipped.items())),
        "errors": [{"offset": e.offset, "message": e.message} for e in report.errors],
    })


def stage_entities(cfg: PipelineConfig, out: Layout) -> None:
    lex_path = cfg.inputs.lexicon
    if lex_path is not None and not Path(lex_path).is_file():
        raise DataError(f"lexicon not found: {lex_path}")
    try:
        lexicon = load_lexicon(Path(lex_path) if lex_path else None)
    except LexiconError as exc:
        raise DataError(str(exc)) from exc
    papers = _load_papers(cfg)
    mentions = match_corpus(papers, lexicon)
    write_mentions_csv(mentions, out.mentions)
    with open(out.coverage, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["year", "percent_with_entity"])
        for y, pct in coverage_by_year(mentions, papers):
            w.writerow([y, repr(pct)])


def stage_network(cfg: PipelineConfig, out: Layout) -> None:
    rows = read_rows_csv(_need(str(out.rows), "rows table"))
    write_network_csv(network_features(rows, cfg.year_list), out.network)


def _tables(out: Layout) -> CorpusTables:
    rows = read_rows_csv(_need(str(out.rows), "rows table"))
    mentions = read_mentions_csv(_need(str(out.mentions), "mentions table"))
    return CorpusTables(rows, mentions, read_network_csv(_need(str(out.network), "network table")))


def stage_panel(cfg: PipelineConfig, out: Layout) -> None:
    tables = _tables(out)
    for y in cfg.year_list:
        panel = build_panel(tables, y, cfg.granularity, cfg.retire_window)
        write_panel_csv(panel, out.panel(y))


def _read_panel(cfg: PipelineConfig, out: Layout, year: int):
    return read_panel_csv(_need(str(out.panel(year)), f"panel for {year}"), year, cfg.granularity)


def stage_discover(cfg: PipelineConfig, out: Layout) -> None:
    def one(year: int) -> EnsembleGraph:
        panel = _read_panel(cfg, out, year)
        return discover_panel(panel, config=cfg.discovery)

    graphs = _pmap(one, cfg.year_list)
    for y, g in zip(cfg.year_list, graphs):
        out.graph(y).write_text(g.to_json(), encoding="utf-8")


def estimate_cell(cfg: PipelineConfig, panel, treatment: str, outcome: str) -> list[AteEstimate]:
    data = panel.effect_data(treatment, outcome)
    e = cfg.estimation
    res = []
    for m in e.methods:
        seed = derive_int(cfg.seed or 0, m, treatment, outcome, panel.year)
        if m == "naive":
            res.append(naive_ate(data))
        elif m == "psm":
            res.append(psm_ate(data, e.caliper, seed))
        elif m == "causal_forest":
            res.append(causal_forest_ate(data, e.forest, seed))
        elif m == "vaine":
            res.append(vaine_ate(data, e.vaine, seed))
    return res


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if not math.isfinite(float(obj)) else float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def stage_estimate(cfg: PipelineConfig, out: Layout) -> None:
    jobs = []
    for y in cfg.year_list:
        panel = _read_panel(cfg, out, y)
        for t, o in cfg.estimation.cells:
            jobs.append((panel, t, o))
    results = _pmap(lambda job: estimate_cell(cfg, *job), jobs)
    estimates = [e for cell in results for e in cell]
    with open(out.estimates, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ESTIMATE_COLUMNS)
        for e in estimates:
            w.writerow(e.row())
    _write_json(out.diagnostics, [
        {"method": e.method, "treatment": e.treatment, "outcome": e.outcome, "year": e.year,
         "diagnostics": _jsonable(e.diagnostics)}
        for e in estimates
    ])


def read_estimates(path: Path) -> list[AteEstimate]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            defined = r["defined"] == "1"
            out.append(AteEstimate(
                r["method"], r["treatment"], r["outcome"], int(r["year"]) if r["year"] else None,
                float(r["estimate"]) if defined else math.nan, int(r["n_treated"]), int(r["n_control"]), defined,
            ))
    return out


def _grid_doc(grid: PersistenceGrid) -> dict:
    return {"years": list(grid.years), "rows": [[c, e, list(grid.cells[(c, e)])] for c, e in grid.rows]}


def _grid_from_doc(doc: dict) -> PersistenceGrid:
    grid = PersistenceGrid(tuple(doc["years"]))
    for c, e, cells in doc["rows"]:
        grid.rows.append((c, e))
        grid.cells[(c, e)] = tuple(cells)
    return grid


def stage_trends(cfg: PipelineConfig, out: Layout) -> None:
    years = cfg.year_list
    graphs = {y: EnsembleGraph.from_json(_need(str(out.graph(y)), f"graph for {y}").read_text(encoding="utf-8"))
              for y in years}
    thr = cfg.trends.weight_threshold
    grids = {kind: persistence_grid(graphs, entity_family(kind), thr, years) for kind in ("retire", "maintain")}
    overlap = overlap_summary(grids["retire"], grids["maintain"])
    recurrent = recurrent_edges(graphs, cfg.trends.min_years, thr)
    estimates = read_estimates(_need(str(out.estimates), "estimates table"))
    methods = [m for m in cfg.estimation.methods if m != "naive"]
    series = [effect_time_series(estimates, t, o, methods, years, cfg.estimation.mean_methods)
              for t, o in cfg.estimation.cells]
    rows = read_rows_csv(_need(str(out.rows), "rows table"))
    history = PublicationHistory(rows, read_mentions_csv(_need(str(out.mentions), "mentions table")))
    pct = {}
    for y in years:
        v = persistence_pct(history, cfg.trends.persistence_group, y) if y + 1 <= history.horizon else math.nan
        pct[str(y)] = None if math.isnan(v) else v
    _write_json(out.trends, {
        "years": years,
        "grids": {k: _grid_doc(g) for k, g in grids.items()},
        "overlap": {k: sorted(v) for k, v in overlap.partitions().items()},
        "recurrent": [[c, e, ys] for c, e, ys in recurrent],
        "series": [
            {"treatment": s.treatment, "outcome": s.outcome, "mean_methods": list(s.mean_methods),
             "values": {m: {str(y): (None if math.isnan(v) else v) for y, v in vals.items()}
                        for m, vals in s.values.items()}}
            for s in series
        ],
        "persistence_pct": pct,
    })


def stage_report(cfg: PipelineConfig, out: Layout) -> list[Path]:
    doc = json.loads(_need(str(out.trends), "trends summary").read_text(encoding="utf-8"))
    ov = doc["overlap"]
    overlap = OverlapSummary(frozenset(ov["retire_only"]) | frozenset(ov["both"]),
                             frozenset(ov["maintain_only"]) | frozenset(ov["both"]))
    series = [
        EffectTimeSeries(
            s["treatment"], s["outcome"], tuple(doc["years"]),
            {m: {int(y): (math.nan if v is None else v) for y, v in vals.items()} for m, vals in s["values"].items()},
            tuple(s["mean_methods"]),
        )
        for s in doc["series"]
    ]
    inputs = ReportInputs(
        grids={k: _grid_from_doc(g) for k, g in doc["grids"].items()},
        overlap=overlap,
        series=series,
        persistence={int(y): (math.nan if v is None else v) for y, v in doc["persistence_pct"].items()},
        years=tuple(doc["years"]),
    )
    return render_reports(inputs, out.reports)


STAGE_FUNCS = {
    "ingest": stage_ingest,
    "entities": stage_entities,
    "network": stage_network,
    "panel": stage_panel,
    "discover": stage_discover,
    "estimate": stage_estimate,
    "trends": stage_trends,
    "report": stage_report,
}


def versions() -> dict:
    import scipy
    import sklearn

    return {
        "pubcausal": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "scikit-learn": sklearn.__version__,
        "kernels": kernels.BACKEND,
    }


def run_stage(cfg: PipelineConfig, stage: str) -> None:
    out = Layout(Path(cfg.output_dir))
    out.root.mkdir(parents=True, exist_ok=True)
    try:
        STAGE_FUNCS[stage](cfg, out)
    except DataError:
        raise
    except (OSError, ValueError, KeyError) as exc:
        if isinstance(exc, FileNotFoundError):
            raise DataError(str(exc)) from exc
        raise StageError(stage, exc) from exc


def run_pipeline(cfg: PipelineConfig, stages: Iterable[str] = STAGES) -> int:
    """Run stages in order and write the manifest; returns the exit status."""
    out = Layout(Path(cfg.output_dir))
    out.root.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config_hash": cfg.digest(),
        "config": cfg.to_dict(),
        "versions": versions(),
        "seeds": {"master": cfg.seed, "scheme": "SeedSequence(master, spawn_key=sha256(method, cell))"},
        "stages": {},
        "stage": None,
        "status": "running",
    }
    status = EXIT_OK
    for stage in stages:
        manifest["stage"] = stage
        t0 = time.perf_counter()
        try:
            run_stage(cfg, stage)
        except DataError as exc:
            manifest.update(status="failed", error=str(exc))
            status = EXIT_DATA
        except StageError as exc:
            manifest.update(status="failed", error=str(exc))
            status = EXIT_STAGE
        manifest["stages"][stage] = {"seconds": round(time.perf_counter() - t0, 3)}
        if status != EXIT_OK:
            LOGGER.error("%s", manifest["error"])
            break
    else:
        manifest.update(stage="complete", status="ok")
    manifest["year_range"] = year_range(cfg.year_list)
    _write_json(out.manifest, manifest)
    return status
