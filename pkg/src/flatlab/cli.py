"""``flatten <kind> --config FILE [--out DIR] [--threads N] [--seed S]``."""

from __future__ import annotations

import argparse
import sys

from . import config as config_mod
from .errors import ConfigError, FlatLabError
from .experiments import run, write_report

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_NUMERIC = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    epilog = config_mod.describe_keys() + "\n\nexit codes: 0 success, 2 config error, 3 budget exceeded, 4 numeric failure"
    parser = _Parser(prog="flatten", description="Run a flattening experiment from a TOML config.",
                     epilog=epilog, formatter_class=fmt)
    sub = parser.add_subparsers(dest="kind", required=True, metavar="<kind>", parser_class=_Parser)
    for kind in config_mod.KINDS:
        p = sub.add_parser(kind, help=f"run a {kind}", epilog=epilog, formatter_class=fmt)
        p.add_argument("--config", required=True, help="TOML config file")
        p.add_argument("--out", help="output directory (overrides run.out)")
        p.add_argument("--threads", type=int, help="worker threads (overrides run.threads)")
        p.add_argument("--seed", type=int, help="random seed (overrides run.seed)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_mod.load(args.config)
        overrides = {}
        if args.out is not None:
            overrides["run__out"] = args.out
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("run.threads", "must be at least 1")
            overrides["run__threads"] = args.threads
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("run.seed", "must be nonnegative")
            overrides["run__seed"] = args.seed
        cfg = cfg.replace(**overrides)
        report = run(args.kind, cfg)
        files = write_report(report, cfg, cfg["run.out"])
    except FlatLabError as exc:
        print(f"flatten: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"flatten: I/O error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for path in files:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
