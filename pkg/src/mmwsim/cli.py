"""Command-line interface.

Subcommands: ``run`` (one scenario), ``sweep`` (Monte Carlo sweep to CSV,
optionally plotted), ``plot`` (re-plot an existing results file) and
``selftest`` (built-in invariant checks).  Exit codes: 0 on success, 1 on
input errors (bad flags, unreadable or invalid config, bad field names),
2 on runtime failures.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import __version__
from .config import RunConfig, dump_effective_config, load_config
from .harness import (
    PRNG_NAME,
    SEED_MIX_NAME,
    emit_plot,
    read_csv,
    run_sweep,
    write_csv,
)
from .scenario import draw_scenario, evaluate_scenario

__all__ = ["main", "build_parser"]

log = logging.getLogger(__name__)

JOBS_ENV_VAR = "MMWSIM_JOBS"


class _Parser(argparse.ArgumentParser):
    # Usage problems are input errors: exit 1, not argparse's default 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="mmwsim",
        description="Monte Carlo link simulator for large-array downlinks",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-v", "--verbose", action="count", default=0,
        help="increase log verbosity (-v info, -vv debug)",
    )

    p_run = sub.add_parser(
        "run", parents=[common],
        help="simulate one scenario and print its metrics",
    )
    p_run.add_argument("--config", required=True, help="TOML configuration file")
    p_run.add_argument(
        "--seed", type=int, default=None,
        help="override the config seed for this invocation",
    )

    p_sweep = sub.add_parser(
        "sweep", parents=[common],
        help="run the configured parameter sweep and write a CSV",
    )
    p_sweep.add_argument("--config", required=True, help="TOML configuration file")
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    p_sweep.add_argument(
        "--seed", type=int, default=None,
        help="override the sweep master seed",
    )
    p_sweep.add_argument(
        "--jobs", type=int, default=None,
        help=f"worker process count (default: ${JOBS_ENV_VAR} or 1)",
    )
    p_sweep.add_argument("--plot-x", default=None, help="CSV column for the plot x axis")
    p_sweep.add_argument("--plot-y", default=None, help="CSV column for the plot y axis")
    p_sweep.add_argument(
        "--plot-group", default=None,
        help="CSV column that separates plot lines",
    )

    p_plot = sub.add_parser(
        "plot", parents=[common],
        help="render an SVG from an existing results CSV",
    )
    p_plot.add_argument("csv", help="results CSV produced by the sweep command")
    p_plot.add_argument("--out", required=True, help="output SVG path")
    p_plot.add_argument("--plot-x", required=True, help="CSV column for the x axis")
    p_plot.add_argument("--plot-y", required=True, help="CSV column for the y axis")
    p_plot.add_argument(
        "--plot-group", default=None,
        help="CSV column that separates plot lines",
    )

    sub.add_parser(
        "selftest", parents=[common],
        help="run built-in invariant checks",
    )
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _resolve_jobs(flag_value: int | None) -> int:
    if flag_value is not None:
        jobs = flag_value
    else:
        raw = os.environ.get(JOBS_ENV_VAR)
        if raw is None:
            return 1
        try:
            jobs = int(raw)
        except ValueError:
            raise ValueError(
                f"environment variable {JOBS_ENV_VAR}={raw!r} is not an integer"
            ) from None
    if jobs < 1:
        raise ValueError(f"worker count must be >= 1, got {jobs}")
    return jobs


def _format_metric(value: float) -> str:
    return format(value, ".9g")


def _cmd_run(args) -> int:
    config = load_config(args.config)
    seed = args.seed if args.seed is not None else config.seed
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    effective = RunConfig(scenario=config.scenario, sweep=config.sweep, seed=seed)
    sys.stdout.write(dump_effective_config(effective))
    rng = np.random.default_rng(seed)
    realization = draw_scenario(config.scenario, rng)
    result = evaluate_scenario(realization, config.scenario)
    print(f"per_user_ase = {';'.join(_format_metric(v) for v in result.per_user_ase)}")
    print(f"sum_ase_bps_hz = {_format_metric(result.sum_ase)}")
    print(f"asee_bpj_hz = {_format_metric(result.asee)}")
    return 0


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    if config.sweep is None:
        raise ValueError(
            f"{args.config}: a [sweep] section is required by the sweep command"
        )
    if (args.plot_x is None) != (args.plot_y is None):
        raise ValueError("--plot-x and --plot-y must be given together")
    if args.plot_group is not None and args.plot_x is None:
        raise ValueError("--plot-group requires --plot-x and --plot-y")
    spec = config.sweep
    if args.seed is not None:
        if args.seed < 0:
            raise ValueError(f"seed must be >= 0, got {args.seed}")
        spec.master_seed = args.seed
    jobs = _resolve_jobs(args.jobs)

    records = run_sweep(spec, jobs=jobs)
    effective = RunConfig(scenario=spec.base, sweep=spec, seed=config.seed)
    metadata = [
        f"prng = \"{PRNG_NAME}\"",
        f"seed_mix = \"{SEED_MIX_NAME}\"",
    ]
    metadata.extend(dump_effective_config(effective).splitlines())
    write_csv(records, args.out, metadata=metadata)
    n_errors = sum(1 for r in records if r.error)
    print(f"wrote {len(records)} records to {args.out}"
          + (f" ({n_errors} error rows)" if n_errors else ""))

    if args.plot_x is not None:
        plot_path = _plot_path_for(args.out)
        emit_plot(records, args.plot_x, args.plot_y, args.plot_group, plot_path)
        print(f"wrote plot to {plot_path}")
    return 0


def _plot_path_for(csv_path: str) -> str:
    root, ext = os.path.splitext(csv_path)
    return f"{root}.svg" if ext.lower() == ".csv" else f"{csv_path}.svg"


def _cmd_plot(args) -> int:
    _, rows = read_csv(args.csv)
    emit_plot(rows, args.plot_x, args.plot_y, args.plot_group, args.out)
    print(f"wrote plot to {args.out}")
    return 0


def _cmd_selftest(args) -> int:
    from .selftest import run_selftest

    ok = run_selftest(verbose=args.verbose > 0)
    if not ok:
        raise RuntimeError("selftest failed")
    return 0


def main(argv: "list[str] | None" = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse help/version exit 0; usage errors exit 1 via _Parser.error.
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 1
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    _configure_logging(getattr(args, "verbose", 0))
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "plot": _cmd_plot,
        "selftest": _cmd_selftest,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"mmwsim: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # simulation failures and genuine bugs
        log.debug("unhandled failure", exc_info=True)
        print(f"mmwsim: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
