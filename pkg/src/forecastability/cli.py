"""Command line entry point: ``forecastability <command> [options]``.

Exit codes: 0 success, 2 configuration error, 3 data error (invalid input data
or missing upstream artifacts), 4 stage failure (any other error inside a stage).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, DataError, StageFailed
from .pipeline.config import FAMILY_CHOICES, describe_config, load_config
from .pipeline.stages import STAGES, run_stages

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_STAGE = 0, 2, 3, 4

log = logging.getLogger("forecastability")

COMMANDS = {
    "ingest": "parse meter and weather CSVs into the cleaned corpus archive",
    "synth": "generate the synthetic archetype corpus",
    "forecast": "backtest the four forecasters on every building",
    "features": "extract the informed, agnostic and combined feature matrices",
    "label": "label every building with its lowest-RMSE forecaster",
    "classify": "grid-search, fit and evaluate the random forest per family",
    "run": "prepare the corpus and run all four stages (cached stages are reused)",
}


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", metavar="PATH", help="JSON config; omitted keys take their defaults")
    p.add_argument("--seed", type=int, metavar="U64", help="global seed (overrides the config)")
    p.add_argument("--out", metavar="DIR", help="artifact directory (overrides the config)")
    p.add_argument("--family", choices=FAMILY_CHOICES, help="feature families to label and classify")
    p.add_argument("--jobs", type=int, metavar="N", help="worker processes")
    p.add_argument("--force", action="store_true", help="rerun steps even when cached")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgParser(prog="forecastability", description=__doc__.splitlines()[0],
                        epilog="configuration keys:\n" + describe_config(),
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgParser)
    for name, help_text in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        _common(p)
        if name == "ingest":
            p.add_argument("--meter-csv", metavar="PATH", help="meter CSV (overrides input.meter_csv)")
            p.add_argument("--weather-csv", metavar="PATH",
                           help="weather CSV (overrides input.weather_csv)")
    return parser


def _config_from_args(args) -> dict:
    overrides = {"seed": args.seed, "out": args.out, "family": args.family, "jobs": args.jobs}
    cfg = load_config(args.config, **overrides)
    if args.command == "ingest":
        if args.meter_csv or args.weather_csv:
            doc = {**cfg, "input": {**cfg["input"]}}
            if args.meter_csv:
                doc["input"]["meter_csv"] = args.meter_csv
            if args.weather_csv:
                doc["input"]["weather_csv"] = args.weather_csv
            cfg = load_config(None, **doc)
        if cfg["input"]["meter_csv"] is None:
            raise ConfigError("ingest needs input.meter_csv and input.weather_csv")
    elif args.command == "synth":
        cfg = load_config(None, **{**cfg, "input": {**cfg["input"], "meter_csv": None,
                                                     "weather_csv": None}})
    return cfg


def _steps(command) -> tuple:
    if command in ("ingest", "synth"):
        return ("corpus",)
    if command == "run":
        return ("corpus", *STAGES)
    return (command,)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _config_from_args(args)
        manifest = run_stages(cfg, _steps(args.command), force=args.force)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageFailed as exc:
        # bad input data inside a stage is still a data error
        if isinstance(exc.cause, DataError):
            print(f"data error: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    _print_summary(cfg, manifest, _steps(args.command))
    return EXIT_OK


def _print_summary(cfg, manifest, steps):
    records = {r["name"]: r for r in manifest.get("stages", [])}
    if "corpus" in manifest:
        records["corpus"] = manifest["corpus"]
    for name in steps:
        rec = records.get(name, {})
        print(f"{name:<9} {rec.get('status', '?'):<7} {len(rec.get('artifacts', {}))} artifacts")
    if "corpus" in steps and "retained_buildings" in manifest:
        print(f"retained buildings: {manifest['retained_buildings']}")
    if "classify" in steps:
        summary = json.loads((Path(cfg["out"]) / "classify" / "summary.json").read_text())
        for fam, s in summary.items():
            print(f"{fam:<9} accuracy {s['accuracy']:.3f}  majority baseline {s['majority_baseline']:.3f}")


if __name__ == "__main__":
    sys.exit(main())
