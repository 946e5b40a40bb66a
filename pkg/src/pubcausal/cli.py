"""Command-line entry point: one subcommand per pipeline stage."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import yaml

from .config import ConfigError, load_config, with_overrides
from .pipeline import EXIT_CONFIG, EXIT_DATA, STAGES, run_pipeline
from .synth import InfeasibleSpecError, generate_synthetic_corpus, spec_from_dict


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML config file")
    p.add_argument("--bib", help="bibliography file")
    p.add_argument("--texts", help="directory of <paper_id>.txt full texts")
    p.add_argument("--countries", help="author_id,year,country table")
    p.add_argument("--lexicon", help="entity_id,pattern table (default: shipped lexicon)")
    p.add_argument("--out", dest="output_dir", help="output directory")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--years", type=int, nargs=2, metavar=("START", "END"), help="analysis years")
    p.add_argument("--granularity", choices=("publication_record", "yearly_portfolio"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pubcausal", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage progress")
    sub = parser.add_subparsers(dest="command", required=True)
    for stage in STAGES:
        _common(sub.add_parser(stage, help=f"run the {stage} stage"))
    _common(sub.add_parser("run-all", help="run every stage in order"))
    synth = sub.add_parser("synth", help="write a synthetic corpus")
    synth.add_argument("--out", type=Path, required=True, help="directory for corpus.bib, texts/ and truth.json")
    synth.add_argument("--spec", type=Path, help="YAML synthetic spec")
    synth.add_argument("--n-authors", type=int, help="author count (overrides --spec)")
    synth.add_argument("--seed", type=int, help="generator seed (overrides --spec)")
    return parser


def _synth(args) -> int:
    try:
        doc = yaml.safe_load(args.spec.read_text(encoding="utf-8")) if args.spec else {}
        spec = spec_from_dict(doc or {})
    except (OSError, yaml.YAMLError, TypeError) as exc:
        print(f"error: bad synthetic spec: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.n_authors is not None:
        spec.n_authors = args.n_authors
    if args.seed is not None:
        spec.seed = args.seed
    try:
        paths = generate_synthetic_corpus(spec, args.out)
    except InfeasibleSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "synth":
        return _synth(args)
    try:
        cfg = load_config(args.config)
        cfg = with_overrides(cfg, bib=args.bib, texts=args.texts, countries=args.countries,
                             lexicon=args.lexicon, output_dir=args.output_dir, seed=args.seed,
                             years=args.years, granularity=args.granularity)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    stages = STAGES if args.command == "run-all" else (args.command,)
    status = run_pipeline(cfg, stages)
    if status == EXIT_DATA:
        print("data error; see manifest.json", file=sys.stderr)
    elif status:
        print("stage failure; see manifest.json", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
