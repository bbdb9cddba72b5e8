"""Command line entry point: ``plaplab <kind> --config FILE [--out DIR] [--seed N]``.

Exit status: 0 on success, 1 on a validation error, 2 on a numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .config import KINDS, parse_config
from .errors import ConfigError, NumericalError
from .experiments import run


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plaplab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"plaplab {__version__}")
    sub = ap.add_subparsers(dest="kind", required=True, metavar="KIND")
    for kind in KINDS:
        sp = sub.add_parser(kind, help=f"run the {kind} experiment")
        sp.add_argument("--config", required=True, help="key = value config file")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--seed", type=_u64, help="data seed (overrides data.seed)")
        sp.add_argument("--workers", type=int, help="parallel instances (overrides run.workers)")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    overrides = {}
    if args.seed is not None:
        overrides["data.seed"] = args.seed
    if args.workers is not None:
        overrides["run.workers"] = args.workers
    if args.out is not None:
        overrides["output.dir"] = args.out
    try:
        cfg = parse_config(text, kind=args.kind, overrides=overrides)
        report = run(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    summary = {"kind": report["kind"], "seed": report["seed"], "results": report["results"],
               "monotonicity": report["monotonicity"]}
    print(json.dumps(summary, indent=2, default=str))
    if "warning" in report:
        print(f"warning: {report['warning']}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
