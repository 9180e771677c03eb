#! /usr/bin/env python3

import asyncio
import csv
import io
from argparse import ArgumentParser, Namespace
from collections.abc import Sequence
from pathlib import Path

from tomlkit import dumps

from kato.lab.config import CorrectorCheckConfig, InequalityConfig, RunConfig, SweepConfig
from kato.lab.report import INEQUALITY_COLUMNS, read_sweep_csv, render_report, write_csv, write_sweep_csv
from kato.lab.sweep import Verdict, default_workers, run_single, run_sweep
from kato.theory.corrector import EXPECTED_SLOPES, verify_corrector_bounds
from kato.theory.inequalities import constant_stability, distance_power_family, random_bump_family, sine_family
from kato.util.exceptions import ConfigError, LabError, OutputError, SolverError
from kato.util.fs import write_atomic
from kato.util.log import LOG, configure_verbosity

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_INCONSISTENT = 4

SWEEP_FILE = "sweep.csv"
REPORT_FILE = "report.svg"
SUMMARY_FILE = "summary.toml"
CORRECTOR_FILE = "corrector.csv"
INEQUALITY_FILE = "inequalities.csv"


def _simulate(args: Namespace) -> int:
    config = RunConfig.load(args.config)
    record = run_single(config)
    LOG.info("Run written to %s", config.output_dir)
    print(dumps(record.dictify()), end="")
    return EXIT_OK


def _sweep(args: Namespace) -> int:
    config = SweepConfig.load(args.config)
    summary = asyncio.run(run_sweep(config.run_configs(), workers=args.workers))
    output_dir = Path(config.output_dir)
    write_sweep_csv(output_dir / SWEEP_FILE, summary.records)
    render_report(summary.records, output_dir / REPORT_FILE)
    write_atomic(output_dir / SUMMARY_FILE, summary.dumps())
    print(summary.dumps(), end="")
    if summary.verdict is Verdict.INCONSISTENT:
        return EXIT_INCONSISTENT
    return EXIT_OK


def _corrector_check(args: Namespace) -> int:
    config = CorrectorCheckConfig.load(args.config)
    grid = config.grid.build()
    sol = config.scenario.build(grid.domain)
    report = verify_corrector_bounds(sol, grid, config.nus, config.t, tolerance=config.tolerance)

    output_dir = Path(config.output_dir)
    rows = [{"nu": nu, **norms} for nu, norms in zip(report.nus, report.norms)]
    write_csv(output_dir / CORRECTOR_FILE, rows, ("nu", *EXPECTED_SLOPES))
    summary = {
        name: {
            "expected": bound.expected,
            "slope": "vanishes" if bound.slope is None else bound.slope,
            "prefactor": bound.prefactor,
            "within_bound": bound.within_bound,
            "holds": bound.holds,
        }
        for name, bound in report.bounds.items()
    }
    summary["holds"] = report.holds
    write_atomic(output_dir / SUMMARY_FILE, dumps(summary))
    print(dumps(summary), end="")
    return EXIT_OK if report.holds else EXIT_INCONSISTENT


def _inequalities(args: Namespace) -> int:
    config = InequalityConfig.load(args.config)
    grid = config.grid.build()
    families = (
        distance_power_family(config.alphas),
        sine_family(config.modes),
        random_bump_family(config.seed, config.count),
    )
    report = constant_stability(families, grid, config.eps_list)
    output_dir = Path(config.output_dir)
    write_csv(output_dir / INEQUALITY_FILE, [row.dictify() for row in report.rows], INEQUALITY_COLUMNS)
    write_atomic(output_dir / SUMMARY_FILE, dumps(report.summary()))
    print(dumps(report.summary()), end="")
    return EXIT_OK


def _report(args: Namespace) -> int:
    records = read_sweep_csv(args.input)
    fits = render_report(records, args.out)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    for name, fit in fits.items():
        writer.writerow([name, "degenerate" if fit is None else format(fit.slope, ".6g")])
    print(buffer.getvalue(), end="")
    return EXIT_OK


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="kato_lab")
    parser.add_argument(
        "-w",
        "--workers",
        type=int,
        default=default_workers(),
        help="worker processes of a sweep (default: physical cores)",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="verbose logging")

    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate_parser = subparsers.add_parser(name="simulate", help="Run one viscosity")
    simulate_parser.set_defaults(run=_simulate)
    simulate_parser.add_argument("-c", "--config", required=True, type=Path, help="RunConfig file")

    sweep_parser = subparsers.add_parser(name="sweep", help="Run a viscosity sweep")
    sweep_parser.set_defaults(run=_sweep)
    sweep_parser.add_argument("-c", "--config", required=True, type=Path, help="SweepConfig file")

    corrector_parser = subparsers.add_parser(name="corrector-check", help="Fit the corrector norms")
    corrector_parser.set_defaults(run=_corrector_check)
    corrector_parser.add_argument("-c", "--config", required=True, type=Path, help="CorrectorCheckConfig file")

    inequality_parser = subparsers.add_parser(name="inequalities", help="Measure Hardy and Poincare ratios")
    inequality_parser.set_defaults(run=_inequalities)
    inequality_parser.add_argument("-c", "--config", required=True, type=Path, help="InequalityConfig file")

    report_parser = subparsers.add_parser(name="report", help="Render a sweep table")
    report_parser.set_defaults(run=_report)
    report_parser.add_argument("-i", "--input", required=True, type=Path, help="sweep CSV")
    report_parser.add_argument("-o", "--out", required=True, type=Path, help="SVG file to write")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_verbosity(args.verbose)
    if args.workers < 1:
        LOG.error("--workers must be at least 1")
        return EXIT_CONFIG

    try:
        return args.run(args)
    except (ConfigError, OutputError, ValueError) as err:
        LOG.error("%s", err)
        return EXIT_CONFIG
    except SolverError as err:
        LOG.error("Solver failure: %s", err)
        return EXIT_SOLVER
    except LabError as err:
        LOG.exception("Unexpected failure: %s", err)
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
