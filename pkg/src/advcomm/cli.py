"""Command line entry point.

    advcomm sweep   --config run.ini [--seed S] [--out results.csv] [--trace t.jsonl]
    advcomm ablate  --config run.ini
    advcomm bounds  --config run.ini
    advcomm analyze-code --alist code.alist [--out report.txt]

Exit codes: 0 success, 2 configuration error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import harness
from .config import ConfigError, ExperimentConfig, load_config

COMMANDS = {"sweep": harness.run_sweep, "ablate": harness.run_ablation, "bounds": harness.run_bound_check}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="advcomm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="INI experiment file (defaults when omitted)")
        s.add_argument("--seed", type=int)
        s.add_argument("--out", help="result CSV path")
        s.add_argument("--trace", help="write per-step JSON-lines traces here")
        s.add_argument("--jobs", type=int, default=1, help="worker processes for frame-level work")
        s.add_argument("--print-config", action="store_true", help="print the effective config and exit")
        s.add_argument("-v", "--verbose", action="store_true")
    a = sub.add_parser("analyze-code")
    a.add_argument("--alist", required=True)
    a.add_argument("--weights", help="four comma-separated fusion weights")
    a.add_argument("--out")
    return p


def _analyze(args) -> int:
    from .ldpc import read_alist
    from .vuln import DEFAULT_WEIGHTS, analyze

    try:
        weights = tuple(float(w) for w in args.weights.split(",")) if args.weights else DEFAULT_WEIGHTS
        if len(weights) != 4:
            raise ValueError("need four weights")
        h = read_alist(args.alist)
    except (OSError, ValueError, IndexError) as exc:
        print(f"advcomm: {exc}", file=sys.stderr)
        return 2
    report = analyze(h, weights).report()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report)
    else:
        sys.stdout.write(report)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "analyze-code":
        return _analyze(args)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig().validate()
        over = {}
        if args.seed is not None:
            over["seed"] = args.seed
        if args.out:
            over["out"] = args.out
        cfg = cfg.with_overrides(**over).validate() if over else cfg
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
    except ConfigError as exc:
        print(f"advcomm: config error: {exc}", file=sys.stderr)
        return 2
    if args.print_config:
        sys.stdout.write(cfg.to_ini())
        return 0
    try:
        result = COMMANDS[args.command](cfg, tracing=bool(args.trace), jobs=args.jobs)
        out = harness.write_outputs(cfg, args.command, result, args.trace)
    except ConfigError as exc:
        print(f"advcomm: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - any failure maps to exit 1
        logging.getLogger(__name__).debug("run failed", exc_info=True)
        print(f"advcomm: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(result.rows)} rows to {out}")
    if "violations" in result.extra:
        print(f"bound violations: {result.extra['violations']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
