"""Command line entry point: ``loggas <subcommand> [--config FILE] [options]``."""
import argparse
import sys

from . import __version__
from .config import DEFAULTS, ENV_PREFIX, KINDS, dumps, load_config
from .errors import ConfigError, LoggasError

EPILOG = f"""\
Every setting has a default; run with --print-defaults to see them all as a
config file. Settings are resolved in this order (later wins): defaults, the
--config file, environment variables {ENV_PREFIX}<SECTION>__<KEY> (or
{ENV_PREFIX}<KEY> for top-level keys, e.g. {ENV_PREFIX}SEED=7), then the flags
below. A seed is required for every subcommand except acceptance-suite.

Set LOGGAS_DISABLE_NUMBA=1 to use the pure numpy kernels.

exit codes: 0 ok, 1 a check failed, 2 configuration error, 3 numerical failure
"""


def build_parser():
    ap = argparse.ArgumentParser(prog="loggas", description="Beta-ensemble numerical laboratory.",
                                 epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=f"loggas {__version__}")
    ap.add_argument("--print-defaults", action="store_true", help="print the default config and exit")
    ap.add_argument("subcommand", nargs="?", choices=KINDS, help="experiment to run")
    ap.add_argument("--config", help="TOML config file")
    ap.add_argument("--seed", type=int, help="master seed")
    ap.add_argument("--threads", type=int, help="worker threads (default: logical cores)")
    ap.add_argument("--out", help=f"output directory (default {DEFAULTS['out']})")
    ap.add_argument("--csv", action="store_true", help="write sample archives as CSV instead of binary")
    ap.add_argument("--level", choices=("quick", "full"), help="acceptance-suite level")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.print_defaults:
        sys.stdout.write(dumps(DEFAULTS))
        return 0
    if not args.subcommand:
        ap.print_usage(sys.stderr)
        print("loggas: error: a subcommand is required", file=sys.stderr)
        return 2
    over = {"experiment": args.subcommand}
    for key in ("seed", "threads", "out"):
        if getattr(args, key) is not None:
            over[key] = getattr(args, key)
    if args.csv:
        over["csv"] = True
    if args.level:
        over["acceptance"] = {"level": args.level}
    try:
        from .harness import run_experiment
        cfg = load_config(args.config, over)
        man = run_experiment(cfg)
    except ConfigError as exc:
        print(f"loggas: config error: {exc}", file=sys.stderr)
        return 2
    except LoggasError as exc:
        print(f"loggas: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    print(f"wrote {len(man.outputs)} files to {man.path}")
    if not man.passed:
        print("loggas: check failed (see summary.json)", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
