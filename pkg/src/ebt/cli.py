"""Command line front-end: ``ebt run <config>`` and ``ebt preset <name>``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
Infeasible sweep points are reported in the output, not via the exit code.
"""

import argparse
import json
import logging
import sys

from .errors import ConfigError, QuadratureError
from .experiments import PRESET_NAMES, ExperimentConfig, load_config, preset, run_experiment

log = logging.getLogger("ebt")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="simulation seed (unsigned 64-bit)")
    common.add_argument("--out", default="ebt-out", help="output directory (default: %(default)s)")
    common.add_argument("--workers", type=int, help="concurrent sweep points")
    common.add_argument("--slots", type=int, help="simulation horizon override, in slots")
    common.add_argument("--simulate", action="store_true",
                        help="also simulate the optimized plans")

    parser = argparse.ArgumentParser(prog="ebt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run a JSON experiment config")
    run.add_argument("config", help="config file, or a summary.json from an earlier run")
    pre = sub.add_parser("preset", parents=[common], help="run or print a built-in preset")
    pre.add_argument("name", choices=PRESET_NAMES)
    pre.add_argument("--emit-config", action="store_true",
                     help="print the preset config as JSON and exit")
    return parser


def _apply_overrides(raw, args):
    sim = raw.setdefault("simulation", {})
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed: must be an unsigned 64-bit integer")
        sim["seed"] = args.seed
    if args.slots is not None:
        sim["horizon"] = args.slots
    if args.simulate:
        sim["enabled"] = True
    if args.workers is not None:
        raw["workers"] = args.workers
    return raw


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = _build_parser().parse_args(argv)
    try:
        raw = load_config(args.config) if args.command == "run" else preset(args.name)
        raw = _apply_overrides(raw, args)
        cfg = ExperimentConfig.from_dict(raw)
        if args.command == "preset" and args.emit_config:
            json.dump(cfg.to_dict(), sys.stdout, indent=2)
            sys.stdout.write("\n")
            return EXIT_OK
        result = run_experiment(cfg, args.out)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (QuadratureError, ArithmeticError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    s = result.summary
    log.info("%d rows (%d infeasible) in %.2f s -> %s",
             s["rows"], len(s["infeasible_points"]), s["wall_clock_s"], args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
