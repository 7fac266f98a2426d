"""Command line entry point: ``fracdecay run|sweep|verify CONFIG``.

Exit status: 0 when everything passes, 1 when a verdict or check fails,
2 for configuration or usage errors, 3 when a run aborts.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .battery import run_battery
from .config import ConfigError, load_config
from .errors import FracDecayError
from .experiment import format_report, run_experiment, run_sweep, write_run

__all__ = ["main", "cmd_run", "cmd_sweep", "cmd_verify", "OUT_ENV", "resolve_out"]

OUT_ENV = "FRACDECAY_OUT"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2, 3


def resolve_out(flag: str | None, cfg) -> str:
    """``--out`` wins, then the ``FRACDECAY_OUT`` environment variable, then the config."""
    if flag:
        return flag
    env = os.environ.get(OUT_ENV)
    if env:
        return env
    return cfg.output["dir"]


def cmd_run(cfg, out_dir: str, *, svg: bool = True) -> int:
    res = run_experiment(cfg)
    write_run(res, out_dir, svg=svg)
    print(format_report(res))
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_sweep(cfg, out_dir: str, *, workers: int = 1, svg: bool = True) -> int:
    rows = run_sweep(cfg, out_dir, workers=workers, svg=svg)
    width = max(len(r["cell"]) for r in rows)
    for r in rows:
        rate = r["rate"] and f"{float(r['rate']):.4g}"
        print(f"{r['status']:<6}{r['cell']:<{width + 2}}{r['model'] or '-':<12}{rate or '-':<10}{r['message']}")
    return EXIT_OK if all(r["status"] == "PASS" for r in rows) else EXIT_FAIL


def cmd_verify(cfg, out_dir: str | None = None) -> int:
    v = cfg.verify
    results = run_battery(
        cfg.seed,
        samples=v["samples"],
        structural_samples=v["structural_samples"],
        comparisons=v["comparisons"],
    )
    table = "\n".join(r.line() for r in results)
    print(table)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "verify.txt"), "w", encoding="utf-8") as fh:
            fh.write(table + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracdecay",
        description="Decay experiments for evolution equations with fractional and classical time derivatives.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "single run: history.csv, report.txt, decay.svg"),
        ("sweep", "cartesian sweep over [sweep] axes with summary.csv"),
        ("verify", "inequality and barrier verification battery"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="configuration file (key = value with [sections])")
        p.add_argument("--out", help=f"output directory (overrides ${OUT_ENV} and the config)")
        p.add_argument("--seed", type=int, help="seed for random samples")
        p.add_argument("--no-svg", action="store_true", help="skip decay.svg")
        p.add_argument("--workers", type=int, help="concurrent sweep cells")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, require_problem=args.command != "verify")
    except OSError as exc:
        print(f"fracdecay: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"fracdecay: invalid config {args.config}:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        if args.seed < 0:
            print("fracdecay: --seed must be >= 0", file=sys.stderr)
            return EXIT_CONFIG
        cfg.output["seed"] = args.seed
    if args.workers is not None and args.workers < 1:
        print("fracdecay: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = resolve_out(args.out, cfg)
    svg = cfg.output["svg"] and not args.no_svg
    try:
        if args.command == "run":
            return cmd_run(cfg, out_dir, svg=svg)
        if args.command == "sweep":
            workers = args.workers if args.workers is not None else cfg.sweep["workers"]
            return cmd_sweep(cfg, out_dir, workers=workers, svg=svg)
        return cmd_verify(cfg, out_dir)
    except FracDecayError as exc:
        print(f"fracdecay: aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
