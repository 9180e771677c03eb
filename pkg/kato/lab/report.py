"""CSV tables and the SVG sweep chart."""

from __future__ import annotations

import csv
import io
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from kato.lab.records import SWEEP_COLUMNS, SweepRecord
from kato.theory.rates import RateFit, fit_series
from kato.util.exceptions import OutputError
from kato.util.fs import write_atomic

DIAGNOSTIC_COLUMNS = (
    "t",
    "e1",
    "e2",
    "e_total",
    "diss_total",
    "diss_layer",
    "I1",
    "I2",
    "I3",
    "I4",
    "I5",
    "hardy_bound",
)
INEQUALITY_COLUMNS = ("family", "member", "eps", "hardy_ratio", "poincare_ratio")

# the two series of the sweep chart
REPORT_SERIES = ("e_sup", "kato_d")

_SVG_STYLE = {
    "svg.hashsalt": "kato-lab",
    "svg.fonttype": "none",
    "font.size": 10.0,
}


def _cell(value: object) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, rows: Sequence[Mapping[str, object]], columns: Sequence[str]) -> Path:
    """
    Write rows under a fixed header; floats keep all significant digits.

    Raises:
        ValueError: If there are no rows. Nothing is written.
        OutputError: If the path is not writable.
    """
    if not rows:
        raise ValueError(f"refusing to write {path} without rows")
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({column: _cell(row[column]) for column in columns})
    return write_atomic(Path(path), buffer.getvalue())


def read_csv(path: Path) -> list[dict[str, str]]:
    try:
        with open(path, newline="", encoding="utf-8") as i_file:
            return list(csv.DictReader(i_file))
    except OSError as err:
        raise OutputError(f"cannot read {path}: {err}") from err


def write_sweep_csv(path: Path, records: Sequence[SweepRecord]) -> Path:
    return write_csv(path, [record.row() for record in records], SWEEP_COLUMNS)


def read_sweep_csv(path: Path) -> list[SweepRecord]:
    """
    Raises:
        OutputError: If the file cannot be read.
        ValueError: If a column is missing or a value is not a number.
    """
    rows = read_csv(path)
    try:
        return [SweepRecord.from_row(row) for row in rows]
    except (KeyError, TypeError) as err:
        raise ValueError(f"{path} is not a sweep table: missing {err}") from err


def series_fits(records: Iterable[SweepRecord], names: Sequence[str] = REPORT_SERIES) -> dict[str, RateFit | None]:
    records = list(records)
    nus = [record.nu for record in records]
    return {name: fit_series(nus, [getattr(record, name) for record in records]) for name in names}


def _label(name: str, fit: RateFit | None) -> str:
    if fit is None:
        return f"{name} (no fit)"
    return f"{name} slope {fit.slope:.3f}"


def render_report(records: Sequence[SweepRecord], path: Path) -> dict[str, RateFit | None]:
    """
    Log-log chart of e_sup and kato_d against nu with their fitted power laws.

    The SVG is byte-identical for identical records.

    Returns:
        dict[str, RateFit | None]: The fit drawn for each series.

    Raises:
        ValueError: If there are no records. Nothing is written.
        OutputError: If the path is not writable.
    """
    if not records:
        raise ValueError(f"refusing to render {path} without records")
    records = sorted(records, key=lambda record: record.nu, reverse=True)
    nus = np.array([record.nu for record in records])
    fits = series_fits(records)

    with matplotlib.rc_context(_SVG_STYLE):
        fig = Figure(figsize=(6.0, 4.5))
        ax = fig.add_subplot()
        for name, marker in zip(REPORT_SERIES, ("o", "s")):
            values = np.array([getattr(record, name) for record in records])
            positive = values > 0
            fit = fits[name]
            points = ax.plot(nus[positive], values[positive], marker=marker, linestyle="none", label=_label(name, fit))
            if fit is not None:
                line = np.exp(fit.intercept) * nus**fit.slope
                ax.plot(nus, line, linestyle="--", color=points[0].get_color())
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("nu")
        ax.set_ylabel("value at T'")
        ax.legend(loc="best")
        ax.grid(True, which="both", alpha=0.3)

        buffer = io.BytesIO()
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    write_atomic(Path(path), buffer.getvalue())
    return fits
