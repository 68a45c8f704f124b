"""Command-line front end: ``aimole run ...`` and ``aimole reference ...``.

Exit codes: 0 on success, 1 on usage or config errors, 2 when a learning run
fails (plant divergence, ill-conditioned update, calibration failure).
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .errors import AimoleError, ConfigError
from .harness import (SCENARIOS, build_reference, default_config, load_config,
                      resolve_scenario, run_scenario)
from .trajectories import write_csv

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 by default, which is reserved for run failures here
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser():
    parser = _Parser(prog="aimole", description="Autonomous learning of feedforward inputs "
                     "for a simulated two-link SCARA robot.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-trial progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run the learning experiment")
    run.add_argument("--scenario", default=None,
                     help="s1, s2, s3 or all (default: config value, else all)")
    run.add_argument("--trials", type=int, default=None, help="number of trials J")
    run.add_argument("--seed", type=int, default=None, help="random seed (default 42)")
    run.add_argument("--config", type=Path, default=None, help="key = value config file")
    run.add_argument("--out", type=Path, default=Path("aimole_out"), help="output directory")

    ref = sub.add_parser("reference", help="write a reference trajectory CSV only")
    ref.add_argument("--scenario", required=True, help="s1, s2 or s3")
    ref.add_argument("--out", type=Path, default=Path("."), help="output directory")
    return parser


def _scenario_ids(name):
    if name == "all":
        return list(SCENARIOS)
    try:
        return [resolve_scenario(name)]
    except Exception as exc:
        raise UsageError(f"unknown scenario {name!r}; expected s1, s2, s3 or all") from exc


def _build_spec(scenario_id, cfg):
    s = cfg.scenario
    return build_reference(scenario_id, s.num_samples, s.sample_period,
                           (s.initial_alpha, s.initial_beta))


def cmd_run(args):
    cfg = load_config(args.config) if args.config else default_config()
    learning = cfg.learning
    if args.seed is not None:
        learning = dataclasses.replace(learning, seed=args.seed)
    if args.trials is not None:
        if args.trials < 1:
            raise UsageError("--trials must be at least 1")
        learning = dataclasses.replace(learning, max_trials=args.trials)
    cfg = dataclasses.replace(cfg, learning=learning)
    ids = _scenario_ids(args.scenario or cfg.scenario.scenario)
    status = EXIT_OK
    for sid in ids:
        out = args.out / sid if len(ids) > 1 else args.out
        report = run_scenario(_build_spec(sid, cfg), config=cfg, out_dir=out)
        h = report.history
        eps = h.epsilons if h else []
        print(f"{sid}: {'FAILED' if report.failed else 'ok'} trials={len(eps)} "
              f"final_epsilon={eps[-1] if eps else float('nan'):.6g} "
              f"wall_time={report.wall_time:.1f}s out={out}")
        if report.failed:
            print(f"{sid}: {report.failure}", file=sys.stderr)
            status = EXIT_FAILURE
    return status


def cmd_reference(args):
    cfg = default_config()
    (sid,) = _scenario_ids(args.scenario) if args.scenario != "all" else (None,)
    if sid is None:
        raise UsageError("reference needs a single scenario")
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "reference.csv"
    write_csv(_build_spec(sid, cfg).reference, path)
    print(path)
    return EXIT_OK


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s %(message)s")
    try:
        return cmd_run(args) if args.command == "run" else cmd_reference(args)
    except (UsageError, ConfigError) as exc:
        print(f"aimole: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"aimole: I/O error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except AimoleError as exc:
        print(f"aimole: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
