"""Command-line entry point.

Exit codes: 0 success, 1 output could not be written, 2 configuration
error, 3 input error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from . import kernels
from .agents import run_session
from .errors import ConfigError, DegenerateGeometry, EmptyScene, IoError, ParseError, SchemaError
from .io import KINDS, build_run_config, load_config_file, load_features, write_outputs

EXIT_OK = 0
EXIT_OUTPUT = 1
EXIT_CONFIG = 2
EXIT_INPUT = 3

SEED_ENV = "GENAGENT_SEED"


def _zone(text: str) -> tuple[float, float, float, float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("zone is minx,miny,maxx,maxy")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _kinds(text: str) -> tuple[str, ...]:
    kinds = tuple(k.strip() for k in text.split(",") if k.strip())
    bad = [k for k in kinds if k not in KINDS]
    if bad or not kinds:
        raise argparse.ArgumentTypeError(f"kinds must be a subset of {','.join(KINDS)}")
    return kinds


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="genagent",
        description="On-the-fly map generalization of buildings and roads with genetic agents.")
    p.add_argument("--input", required=True, help="GeoJSON FeatureCollection with a 'kind' property per feature")
    p.add_argument("--output", required=True, help="generalized GeoJSON to write")
    p.add_argument("--source-scale", type=float, required=True, metavar="N", help="source scale denominator")
    p.add_argument("--target-scale", type=float, required=True, metavar="N", help="target scale denominator")
    p.add_argument("--config", help="JSON file with defaults (ga, session, thresholds, ...)")
    p.add_argument("--seed", type=int, help=f"GA seed (falls back to ${SEED_ENV}, then 0)")
    p.add_argument("--deadline-ms", type=float, help="session wall-clock budget")
    p.add_argument("--max-rounds", type=int)
    p.add_argument("--workers", type=int, help="threads running agent GAs within a round")
    p.add_argument("--svg", help="write an SVG rendering here")
    p.add_argument("--px-per-mm", type=float, help="SVG pixels per map millimetre (default 4)")
    p.add_argument("--report", help="write one JSON object per round here")
    p.add_argument("--report-timing", action="store_true", help="include elapsed_ms in the report file")
    p.add_argument("--zone", type=_zone, metavar="MINX,MINY,MAXX,MAXY")
    p.add_argument("--kinds", type=_kinds, metavar="building,road")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _seed(arg: int | None) -> int | None:
    if arg is not None:
        return arg
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return None
    try:
        return int(env)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from exc


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    try:
        file_data = load_config_file(args.config) if args.config else None
        seed = _seed(args.seed)
        session = {"deadline_ms": args.deadline_ms, "max_rounds": args.max_rounds, "workers": args.workers}
        overrides = {
            "input_path": args.input,
            "output_path": args.output,
            "svg_path": args.svg,
            "report_path": args.report,
            "source_scale": args.source_scale,
            "target_scale": args.target_scale,
            "zone": args.zone,
            "kinds": args.kinds,
            "px_per_mm": args.px_per_mm,
            "report_timing": args.report_timing or None,
            "ga": {"rng_seed": seed} if seed is not None else None,
            "session": {k: v for k, v in session.items() if v is not None} or None,
        }
        cfg = build_run_config(overrides, file_data)
    except ConfigError as exc:
        print(f"genagent: configuration error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG

    try:
        objects = load_features(cfg.input_path, cfg.zone, cfg.kinds)
    except (IoError, ParseError, SchemaError, EmptyScene, DegenerateGeometry) as exc:
        print(f"genagent: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    kernels.warmup()
    t = cfg.thresholds
    result = run_session(objects, cfg.spec, cfg.ga, cfg.session, bounds=cfg.bounds,
                         defensive_floor=t.defensive_floor, elimination_penalty=t.elimination_penalty)
    try:
        write_outputs(objects, result, cfg)
    except IoError as exc:
        print(f"genagent: output error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    print(f"rounds={result.rounds} nc={result.final_nc} f_sum={result.final_f_sum:.6g} "
          f"elapsed_ms={result.elapsed_ms:.0f}", file=sys.stderr)
    return EXIT_OK


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
