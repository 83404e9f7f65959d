"""conelab command line: run, validate, and enumerate experiments.

Exit codes: 0 all checks passed; 1 experiment ran but a check failed;
2 configuration problem; 3 domain/instability error during the run.
CONELAB_THREADS (the only environment knob) caps BLAS/FFT threads.
"""

from __future__ import annotations

import argparse
import os
import sys


def _apply_thread_env() -> None:
    threads = os.environ.get("CONELAB_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conelab",
        description="light-cone locality checks for relativistic field "
                    "dynamics on desk-scale lattices")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one scenario file")
    run_p.add_argument("config", help="path to the scenario file")
    run_p.add_argument("--seed-override", default=None,
                       help="comma-separated seeds replacing the config's")
    run_p.add_argument("--out-dir", default=None,
                       help="directory for report.json and CSV artifacts")

    val_p = sub.add_parser("validate", help="check a scenario file, list "
                                            "every problem found")
    val_p.add_argument("config", help="path to the scenario file")

    sub.add_parser("list-experiments", help="print the known experiment names")
    return parser


def main(argv=None) -> int:
    _apply_thread_env()
    args = build_parser().parse_args(argv)

    from .config import EXPERIMENTS, format_issues, load_config
    from .errors import ConfigurationError, DomainError

    if args.command == "list-experiments":
        for name in EXPERIMENTS:
            print(name)
        return 0

    try:
        config, issues = load_config(args.config)
    except OSError as err:
        print(f"cannot read config: {err}", file=sys.stderr)
        return 2

    if args.command == "validate":
        if config is None:
            print(format_issues(issues), file=sys.stderr)
            return 2
        print("ok")
        return 0

    if config is None:
        print(format_issues(issues), file=sys.stderr)
        return 2

    if args.seed_override is not None:
        if "seeds" not in config.solver:
            print("this experiment takes no seeds", file=sys.stderr)
            return 2
        try:
            config.solver["seeds"] = tuple(
                int(s) for s in args.seed_override.split(",") if s.strip())
        except ValueError:
            print("--seed-override expects comma-separated integers",
                  file=sys.stderr)
            return 2
        if not config.solver["seeds"]:
            print("--seed-override produced an empty seed list",
                  file=sys.stderr)
            return 2

    from .experiments import run_experiment

    try:
        report = run_experiment(config, out_dir=args.out_dir)
    except ConfigurationError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except DomainError as err:
        print(f"domain error: {err}", file=sys.stderr)
        return 3

    for check in report.checks:
        print(check.line())
    print(f"overall: {'PASS' if report.passed else 'FAIL'} "
          f"({report.wall_clock_s:.2f} s)")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
