"""Command-line entry point.

    namemd decompose <config.yaml>   IMF dumps and diagnostics
    namemd forecast <config.yaml>    full grid, reports, DM tests
    namemd report <config.yaml>      re-tabulate an existing report.json
    namemd plot <dir>                SVG figures from the files in <dir>

On failure a single line ``error: <ExceptionType>: <message>`` goes to
stderr and the exit code is 1 (2 for usage errors).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import pandas as pd

from namemd.config import load_config
from namemd.multivariate import ImfDecomposition
from namemd.pipeline import load_reports, report_table, run_decomposition, run_experiment
from namemd.plots import emit_plots


def cmd_decompose(args) -> int:
    config = load_config(args.config)
    dec, diagnostics, paths = run_decomposition(config)
    print(f"{dec.imf_count} IMFs per channel over {dec.length} months")
    for p in paths:
        print(p)
    return 0


def cmd_forecast(args) -> int:
    config = load_config(args.config)
    artifacts = run_experiment(config)
    with pd.option_context("display.width", 160, "display.max_columns", 50):
        print(report_table(artifacts.reports).to_string(index=False, float_format="%.4f"))
    for model, res in artifacts.dm_tests.items():
        print(f"DM {model}: S={res.statistic:.4f} p={res.p_value:.4g}")
    print(f"outputs in {config.output_dir}")
    return 0


def cmd_report(args) -> int:
    config = load_config(args.config)
    out = Path(config.output_dir)
    reports = load_reports(out / "report.json")
    table = report_table(reports)
    table.to_csv(out / "report_table.csv", index=False, float_format="%.10g")
    with pd.option_context("display.width", 160, "display.max_columns", 50):
        print(table.to_string(index=False, float_format="%.4f"))
    dm_path = out / "dm_tests.json"
    if dm_path.exists():
        for model, res in json.loads(dm_path.read_text(encoding="utf-8")).items():
            print(f"DM {model}: S={res['statistic']:.4f} p={res['p_value']:.4g}")
    return 0


def cmd_plot(args) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"no such directory: {directory}")
    imf_files = sorted(directory.glob("imfs_*.csv"))
    dec = ImfDecomposition.from_csv(imf_files) if imf_files else None
    report_path = directory / "report.json"
    reports = load_reports(report_path) if report_path.exists() else []
    if dec is None and not reports:
        raise FileNotFoundError(f"{directory} holds neither imfs_*.csv nor report.json")
    for p in emit_plots(dec, reports, args.out or directory):
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="namemd", description="NA-MEMD decomposition-ensemble forecasting")
    parser.add_argument("-v", "--verbose", action="store_true", help="log grid progress")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (
        ("decompose", cmd_decompose, "decompose the configured channels"),
        ("forecast", cmd_forecast, "run the forecasting grid"),
        ("report", cmd_report, "tabulate an existing report.json"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="YAML experiment config")
        p.set_defaults(func=fn)
    p = sub.add_parser("plot", help="render SVGs from an output directory")
    p.add_argument("directory")
    p.add_argument("--out", help="write SVGs here instead of the input directory")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - one machine-readable line, then exit
        msg = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
