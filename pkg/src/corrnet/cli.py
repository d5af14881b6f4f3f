"""Command-line entry point: ``corrnet run|synth|metrics|jaccard``.

Exit status is 0 on success, 1 on data errors and 2 on configuration
errors (including bad arguments).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from . import export
from .errors import ConfigError, DataError
from .ingest import FILL_POLICIES, LAYOUTS, WindowSpec
from .netgraph import CLUSTERING_RULES
from .pipeline import (
    ARTIFACT_CLASSES,
    RunConfig,
    print_summary,
    recompute_metrics,
    recompute_similarity,
    run_pipeline,
)
from .synth import bundled_spec, generate, load_spec

logger = logging.getLogger("corrnet")

EXIT_OK, EXIT_DATA, EXIT_CONFIG = 0, 1, 2

# built-in defaults, overridden by a --config file, overridden by flags
RUN_DEFAULTS: Dict[str, Any] = {
    "layout": "long",
    "fill": "ffill",
    "window_mode": "year",
    "window_length": 260,
    "window_step": None,
    "min_days": 50,
    "theta": 0.3,
    "theta_sweep": None,
    "density_convention": "prose",
    "clustering_rule": "paper",
    "subset": None,
    "all_components": False,
    "regime_drop": 0.5,
    "sigma_floor": 1e-12,
    "workers": None,
    "skip": [],
}


def _theta_list(text: str) -> List[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid theta list {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("theta list is empty")
    return values


def _analysis_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theta", type=float, default=None,
                   help="correlation threshold for links (default 0.3; first sweep value when "
                        "--theta-sweep is given)")
    p.add_argument("--theta-sweep", type=_theta_list, default=None, metavar="A,B,C",
                   help="evaluate metrics at each of these thresholds")
    p.add_argument("--density-convention", choices=("prose", "paper"), default=None,
                   help="prose: 2M/(N(N-1)) (default); paper: M/(N(N-1))")
    p.add_argument("--clustering-rule", choices=CLUSTERING_RULES, default=None,
                   help="paper: C_i=0 when degree<=2 (default); standard: when degree<2")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrnet",
        description="Correlation threshold networks and Jaccard regime analysis of price panels.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="full pipeline from a price CSV to all artifacts")
    run.add_argument("--input", type=Path, required=True, help="price CSV (UTF-8, header row)")
    run.add_argument("--output", type=Path, required=True, help="output directory")
    run.add_argument("--config", type=Path, default=None,
                     help="JSON file of option defaults; keys are flag names")
    run.add_argument("--layout", choices=LAYOUTS, default=None, help="default: long")
    run.add_argument("--fill", choices=FILL_POLICIES, default=None, help="default: ffill")
    run.add_argument("--window-mode", choices=("year", "fixed"), default=None, help="default: year")
    run.add_argument("--window-length", type=int, default=None,
                     help="rows per fixed window (default 260)")
    run.add_argument("--window-step", type=int, default=None,
                     help="rows between fixed window starts (default: window length)")
    run.add_argument("--min-days", type=int, default=None,
                     help="minimum rows for a calendar-year window (default 50)")
    _analysis_flags(run)
    run.add_argument("--all-components", action="store_true", default=None,
                     help="add whole-network node, edge and component counts to metrics.csv")
    run.add_argument("--subset", type=Path, default=None,
                     help="file with one instrument label per line to restrict the panel")
    run.add_argument("--regime-drop", type=float, default=None,
                     help="flag windows whose J to the previous window is below this fraction "
                          "of the median adjacent J (default 0.5)")
    run.add_argument("--sigma-floor", type=float, default=None,
                     help="exclude instruments whose return std is below this (default 1e-12)")
    run.add_argument("--workers", type=int, default=None,
                     help="window worker threads (default: $CORRNET_THREADS or CPU count)")
    run.add_argument("--skip", action="append", choices=ARTIFACT_CLASSES, default=None,
                     help="do not write this artifact class (repeatable)")
    run.add_argument("--quiet", action="store_true", help="do not print the summary table")

    synth = sub.add_parser("synth", help="write a synthetic wide-layout price CSV")
    synth.add_argument("--spec", type=Path, default=None,
                       help="SynthSpec JSON (default: bundled 30-index, 13-year spec)")
    synth.add_argument("--out", type=Path, required=True, help="CSV path to write")

    metrics = sub.add_parser("metrics", help="recompute metrics.csv from saved corr_<window>.csv")
    metrics.add_argument("--corr-dir", type=Path, required=True)
    _analysis_flags(metrics)
    metrics.add_argument("--out", type=Path, default=None, help="write here instead of stdout")

    jac = sub.add_parser("jaccard", help="recompute jaccard.csv from saved network files")
    jac.add_argument("--networks", type=Path, required=True,
                     help="directory holding network_<window>.graphml (or .dot)")
    jac.add_argument("--regime-drop", type=float, default=0.5)
    jac.add_argument("--out", type=Path, default=None,
                     help="directory for jaccard.csv and regime_flags.txt (default: stdout)")
    return parser


def _load_config_file(path: Optional[Path]) -> Dict[str, Any]:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load config {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config file must hold a JSON object")
    out = {}
    for key, value in obj.items():
        key = key.replace("-", "_")
        if key not in RUN_DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = value
    return out


def config_from_args(args: argparse.Namespace) -> RunConfig:
    from_file = _load_config_file(args.config)
    merged = dict(RUN_DEFAULTS)
    merged.update(from_file)
    for key in RUN_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value

    sweep = merged["theta_sweep"]
    if isinstance(sweep, str):
        sweep = _theta_list(sweep)
    sweep = tuple(float(x) for x in sweep or ())
    theta_given = args.theta is not None or "theta" in from_file
    theta = float(merged["theta"]) if theta_given or not sweep else sweep[0]

    length = int(merged["window_length"])
    step = merged["window_step"]
    window = WindowSpec(
        mode=merged["window_mode"],
        length=length,
        step=length if step is None else int(step),
        min_days=int(merged["min_days"]),
    )
    skip = set(merged["skip"] or ())
    return RunConfig(
        input=args.input,
        output=args.output,
        layout=merged["layout"],
        fill=merged["fill"],
        window=window,
        theta=theta,
        theta_sweep=sweep,
        density_convention=merged["density_convention"],
        clustering_rule=merged["clustering_rule"],
        subset=None if merged["subset"] is None else Path(merged["subset"]),
        all_components=bool(merged["all_components"]),
        regime_drop=float(merged["regime_drop"]),
        sigma_floor=float(merged["sigma_floor"]),
        workers=None if merged["workers"] is None else int(merged["workers"]),
        emit=tuple(c for c in ARTIFACT_CLASSES if c not in skip),
    )


def _cmd_run(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    result = run_pipeline(config)
    if not args.quiet:
        if {"metrics", "correlation", "similarity"} <= set(config.emit):
            print_summary(result.output, sys.stdout)
        print(f"wrote {len(result.manifest['artifacts'])} artifacts to {result.output}")
    return EXIT_OK


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = bundled_spec() if args.spec is None else load_spec(args.spec)
    panel = generate(spec)
    rows = [["date", *panel.instruments]]
    rows += [[d.isoformat(), *(repr(float(x)) for x in row)]
             for d, row in zip(panel.dates, panel.closes)]
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(export.csv_text(rows), encoding="utf-8")
    return EXIT_OK


def _cmd_metrics(args: argparse.Namespace) -> int:
    sweep = tuple(args.theta_sweep or ())
    thetas = sweep or ((0.3 if args.theta is None else args.theta),)
    reports = recompute_metrics(
        args.corr_dir,
        thetas,
        args.density_convention or "prose",
        args.clustering_rule or "paper",
    )
    text = export.metrics_csv(reports)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text, encoding="utf-8")
    return EXIT_OK


def _cmd_jaccard(args: argparse.Namespace) -> int:
    if not 0.0 < args.regime_drop < 1.0:
        raise ConfigError("--regime-drop must lie in (0, 1)")
    sim, flags = recompute_similarity(args.networks, args.regime_drop)
    if args.out is None:
        sys.stdout.write(export.jaccard_csv(sim))
    else:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "jaccard.csv").write_text(export.jaccard_csv(sim), encoding="utf-8")
        (args.out / "regime_flags.txt").write_text(export.regime_flags_text(flags),
                                                   encoding="utf-8")
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "synth": _cmd_synth, "metrics": _cmd_metrics, "jaccard": _cmd_jaccard}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"corrnet: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"corrnet: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"corrnet: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
