"""Command-line surface: POI ingestion, scenario replay, ad-hoc spatial
queries and case-base inspection.

Delimited outputs (event log, bus trace, store files) are the primary
artifacts; --figures renders the matplotlib report set alongside them.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bus import Notification
from .casebase import CaseBase, load_stereotypes
from .context import DEFAULT_TEMPLATE, load_template
from .engine import Engine, EngineConfig, load_engine_config
from .geo import GeoPoint, load_pois, nearest_poi, pois_in_radius, save_pois
from .scenario import load_scenario, run_scenario


def _cmd_ingest(args: argparse.Namespace) -> int:
    store, rejected = load_pois(args.poi_file)
    for lineno, reason in rejected:
        print(f"line {lineno} rejected: {reason}", file=sys.stderr)
    save_pois(store, args.out)
    print(f"ingested {len(store)} POIs -> {args.out} ({len(rejected)} rejected)")
    return 0


def _cmd_run_scenario(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    store, rejected = load_pois(args.pois)
    for lineno, reason in rejected:
        print(f"poi line {lineno} rejected: {reason}", file=sys.stderr)

    base = CaseBase.load(args.casebase) if Path(args.casebase).exists() else CaseBase()
    config = load_engine_config(args.config) if args.config else EngineConfig()
    template = load_template(args.template) if args.template else DEFAULT_TEMPLATE
    stereotypes = load_stereotypes(args.stereotypes) if args.stereotypes else []

    engine = Engine(base, store, config, template, stereotypes)
    log, bus = run_scenario(scenario, engine, repository=args.repository)

    log.save(args.log)
    base.save(args.casebase)
    if args.trace:
        bus.save_trace(args.trace)
    if args.figures:
        from .geo import load_track
        from .report import render_run_figures

        solution = None
        for env in reversed(bus.processed):
            if isinstance(env.payload, Notification):
                solution = env.payload.solution
                break
        track = load_track(scenario.track_path) if scenario.track_path else None
        for path in render_run_figures(store, solution, base, args.figures, track):
            print(f"figure {path}")
    for line in log.lines():
        print(line)
    return 0


def _cmd_query(args: argparse.Namespace) -> int:
    store, _ = load_pois(args.pois)
    pos = GeoPoint(args.lat, args.lon)
    if args.radius is not None:
        for poi, d in pois_in_radius(store, pos, args.radius):
            print(f"{poi.id}\t{poi.name}\t{d:.1f}\t{poi.category}")
        return 0
    hit = nearest_poi(store, pos, args.nearest or None)
    if hit is None:
        print("no match")
        return 1
    poi, d = hit
    print(f"{poi.id}\t{poi.name}\t{d:.1f}\t{poi.category}")
    return 0


def _cmd_casebase_stats(args: argparse.Namespace) -> int:
    base = CaseBase.load(args.casebase)
    for key, value in base.counts().items():
        print(f"{key}={value}")
    if args.figures:
        from .report import render_casebase_counts

        outdir = Path(args.figures)
        outdir.mkdir(parents=True, exist_ok=True)
        print(f"figure {render_casebase_counts(base, outdir / 'casebase.png')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctxlearn",
        description="Context-aware learning-point recommender and scenario simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-pois", help="Normalize a POI file into a store file.")
    p.add_argument("poi_file")
    p.add_argument("--out", required=True, help="Store file to write.")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("run-scenario", help="Replay a scenario file against a POI store.")
    p.add_argument("scenario")
    p.add_argument("--pois", required=True, help="POI store file.")
    p.add_argument("--casebase", required=True, help="Case file; loaded if present, saved after.")
    p.add_argument("--config", default=None, help="Engine config (key=value).")
    p.add_argument("--log", required=True, help="Event log output path.")
    p.add_argument("--trace", default=None, help="Bus trace output path.")
    p.add_argument("--template", default=None, help="Context template file.")
    p.add_argument("--stereotypes", default=None, help="Stereotype catalog file.")
    p.add_argument("--repository", default=None, help="Directory of per-POI description files.")
    p.add_argument("--figures", default=None, help="Directory for the report figures.")
    p.set_defaults(func=_cmd_run_scenario)

    p = sub.add_parser("query", help="Ad-hoc spatial queries against a store.")
    p.add_argument("--pois", required=True)
    p.add_argument("--lat", type=float, required=True)
    p.add_argument("--lon", type=float, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--radius", type=float, default=None, help="Radius query in meters.")
    group.add_argument("--nearest", default=None, help="Nearest POI of a category ('' = any).")
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("casebase-stats", help="Counts by kind, demotions, prototypes.")
    p.add_argument("--casebase", required=True)
    p.add_argument("--figures", default=None, help="Directory for the counts figure.")
    p.set_defaults(func=_cmd_casebase_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
