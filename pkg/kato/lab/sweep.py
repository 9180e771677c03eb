"""Single runs, viscosity sweeps and the two-sided consistency verdict."""

from __future__ import annotations

import asyncio
import time
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import psutil
from tomlkit import dumps

from kato.flow.solver import trajectory
from kato.flow.snapshot import snapshot_name, write_snapshot
from kato.flow.state import EnergyLedger, FlowState
from kato.lab.config import RunConfig
from kato.lab.records import SweepRecord
from kato.lab.report import DIAGNOSTIC_COLUMNS, write_csv
from kato.mesh.geometry import layer_mask
from kato.theory.corrector import build_corrector
from kato.theory.diagnostics import (
    GronwallClosure,
    energy_deficit,
    gronwall_constant,
    gronwall_terms,
    kato_dissipation,
    relative_energy,
)
from kato.theory.euler import sample_density, sample_velocity
from kato.theory.inequalities import measured_hardy_constant
from kato.theory.rates import RateFit, fit_series
from kato.util.exceptions import ConfigError, ResolutionError, SolverError
from kato.util.fs import write_atomic
from kato.util.log import LOG, run_logger

# cells across one nu-strip needed before the layer dissipation is trusted
STRIP_CELLS = 6

DIAGNOSTICS_FILE = "diagnostics.csv"
RECORD_FILE = "record.toml"
SNAPSHOT_DIR = "snapshots"

FITTED_QUANTITIES = ("e_sup", "e1_final", "e2_final", "kato_d")

# slope thresholds of the verdict
TREND_SLOPE = 0.1
TREND_RESIDUAL = 0.2
FLAT_SLOPE = 0.02


def default_workers() -> int:
    return psutil.cpu_count(logical=False) or 1


def run_single(config: RunConfig) -> SweepRecord:
    """
    Run one viscous simulation from the Euler data at t = 0 and evaluate its diagnostics.

    Writes the diagnostics table, a record summary and optionally one snapshot per
    sample into config.output_dir.

    Raises:
        ResolutionError: If fewer than six cells fit across a nu-strip.
        SolverError: If the time stepping fails.
        OutputError: If the outputs cannot be written.
    """
    log = run_logger(config.nu)
    started = time.perf_counter()
    nu = config.nu
    grid = config.grid.build()
    mask = layer_mask(grid, nu)
    if mask.strip_cells() < STRIP_CELLS:
        raise ResolutionError(
            f"nu={nu:g} is not resolved on {grid.descriptor}: {mask.strip_cells():.2f} cells per strip, "
            f"{STRIP_CELLS} needed"
        )
    sol = config.scenario.build(grid.domain)
    output_dir = Path(config.output_dir)

    rho_0 = sample_density(sol, grid, 0.0)
    state = FlowState.initial(rho_0, sample_velocity(sol, grid, 0.0), nu, tol=config.poisson_tol)
    ledger = EnergyLedger(mask)

    samples = round(config.horizon / config.output_interval)
    sample_times = [k * config.output_interval for k in range(samples + 1)]
    rho_min = float(rho_0.values.min())
    constant = max(gronwall_constant(sol, grid, t, rho_min) for t in sample_times)
    hardy_constant = measured_hardy_constant(grid, nu, config.seed)
    closure = GronwallClosure(constant)
    corrector = build_corrector(sol, grid, nu, 0.0)
    log.info(
        "Starting %s on %s to T'=%g (C=%.4g, C_H=%.4g)",
        sol.name,
        grid.descriptor,
        config.horizon,
        constant,
        hardy_constant,
    )

    rows = []
    e_sup = 0.0
    energy = None
    steps = trajectory(
        state,
        config.horizon,
        config.output_interval,
        ledger,
        cfl=config.cfl,
        dt_max=config.dt_max,
        poisson_tol=config.poisson_tol,
    )
    try:
        for index, state in enumerate(steps):
            if not sol.steady:
                corrector = build_corrector(sol, grid, nu, state.time)
            energy = relative_energy(state, sol)
            terms = gronwall_terms(state, sol, corrector, hardy_constant)
            closure.add(energy, terms)
            e_sup = max(e_sup, energy.e_total)
            _, total, layer = ledger.at(state.time)
            rows.append(
                {
                    "t": state.time,
                    "e1": energy.e1,
                    "e2": energy.e2,
                    "e_total": energy.e_total,
                    "diss_total": total,
                    "diss_layer": layer,
                    "I1": terms.i1,
                    "I2": terms.i2,
                    "I3": terms.i3,
                    "I4": terms.i4,
                    "I5": terms.i5,
                    "hardy_bound": terms.hardy_bound,
                }
            )
            if config.write_snapshots:
                write_snapshot(output_dir / SNAPSHOT_DIR / snapshot_name(index), state)
    except SolverError as err:
        log.error("Run failed at t=%.6g: %s", state.time, err)
        raise

    write_csv(output_dir / DIAGNOSTICS_FILE, rows, DIAGNOSTIC_COLUMNS)
    record = SweepRecord(
        nu=nu,
        e1_final=energy.e1,
        e2_final=energy.e2,
        e_sup=e_sup,
        kato_d=kato_dissipation(ledger, state.time, nu),
        diss_total=ledger.dissipation_total[-1],
        gronwall_max_violation=closure.max_violation,
        wall_clock=time.perf_counter() - started,
        grid=grid.descriptor,
        energy_deficit=energy_deficit(ledger),
    )
    write_atomic(output_dir / RECORD_FILE, dumps(record.dictify()))
    log.info("Finished: e_sup=%.4e kato_d=%.4e in %.1fs", record.e_sup, record.kato_d, record.wall_clock)
    return record


class Verdict(str, Enum):
    CONSISTENT = "CONSISTENT"
    INCONSISTENT = "INCONSISTENT"
    TRIVIALLY_CONSISTENT = "trivially consistent"


HOMOGENEOUS_REGIME = "homogeneous regime"
INHOMOGENEOUS_REGIME = "inhomogeneous regime"


def _vanishes(fit: RateFit | None, values: Sequence[float]) -> bool:
    if fit is None:
        return all(value == 0 for value in values)
    return fit.slope > TREND_SLOPE and fit.max_residual < TREND_RESIDUAL


def _persists(fit: RateFit | None) -> bool:
    return fit is not None and fit.slope < FLAT_SLOPE


def consistency_verdict(records: Sequence[SweepRecord], fits: dict[str, RateFit | None]) -> Verdict:
    """
    INCONSISTENT when one of e_sup and kato_d trends to zero while the other does not.

    Series that are zero for every nu count as trending to zero; when both are, the
    sweep is trivially consistent.
    """
    energy = [record.e_sup for record in records]
    layer = [record.kato_d for record in records]
    if all(value == 0 for value in energy + layer):
        return Verdict.TRIVIALLY_CONSISTENT
    energy_fit, layer_fit = fits["e_sup"], fits["kato_d"]
    if _vanishes(energy_fit, energy) and _persists(layer_fit):
        return Verdict.INCONSISTENT
    if _vanishes(layer_fit, layer) and _persists(energy_fit):
        return Verdict.INCONSISTENT
    return Verdict.CONSISTENT


@dataclass(frozen=True)
class SweepSummary:
    """
    Attributes:
        records (tuple[SweepRecord, ...]): One per run, nu descending.
        fits (dict[str, RateFit | None]): Power laws of the fitted quantities, None when degenerate.
        verdict (Verdict): Two-sided consistency of e_sup and kato_d.
        regime (str): "homogeneous regime" when the scenario density is constant.
    """

    records: tuple[SweepRecord, ...]
    fits: dict[str, RateFit | None]
    verdict: Verdict
    regime: str

    def dictify(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "regime": self.regime,
            "fits": {
                name: ({"degenerate": True} if fit is None else fit.dictify()) for name, fit in self.fits.items()
            },
            "nus": [record.nu for record in self.records],
        }

    def dumps(self) -> str:
        return dumps(self.dictify())


def summarize(records: Sequence[SweepRecord], homogeneous: bool) -> SweepSummary:
    """Fit the records and label the regime by whether the scenario density is constant."""
    records = tuple(sorted(records, key=lambda record: record.nu, reverse=True))
    nus = [record.nu for record in records]
    fits = {name: fit_series(nus, [getattr(record, name) for record in records]) for name in FITTED_QUANTITIES}
    regime = HOMOGENEOUS_REGIME if homogeneous else INHOMOGENEOUS_REGIME
    return SweepSummary(records, fits, consistency_verdict(records, fits), regime)


def _check_sweep(configs: Sequence[RunConfig]) -> list[RunConfig]:
    if len(configs) < 3:
        raise ConfigError(f"a sweep needs at least 3 runs, got {len(configs)}")
    first = configs[0]
    for config in configs[1:]:
        if config.scenario != first.scenario:
            raise ConfigError("all runs of a sweep must share the scenario")
        if config.horizon != first.horizon:
            raise ConfigError("all runs of a sweep must share the horizon")
    nus = [config.nu for config in configs]
    if len(set(nus)) != len(nus):
        raise ConfigError("viscosities of a sweep must be distinct")
    return sorted(configs, key=lambda config: config.nu, reverse=True)


def _init_worker(level: int) -> None:
    LOG.setLevel(level)


def _run_serialized(config: RunConfig) -> bytes:
    return run_single(config).serialize()


async def run_sweep(configs: Sequence[RunConfig], workers: int | None = None) -> SweepSummary:
    """
    Execute the runs concurrently and summarize them.

    Args:
        configs (Sequence[RunConfig]): At least three runs sharing scenario and horizon.
        workers (int | None): Worker processes; 1 runs in this process. Defaults to the
            physical core count.

    Raises:
        ConfigError: If the runs do not form a sweep.
    """
    configs = _check_sweep(configs)
    workers = workers or default_workers()
    LOG.info("Sweeping %d viscosities with %d workers", len(configs), workers)

    if workers == 1:
        results = [_run_serialized(config) for config in configs]
    else:
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(
            max_workers=min(workers, len(configs)), initializer=_init_worker, initargs=(LOG.level,)
        ) as pool:
            futures = [loop.run_in_executor(pool, _run_serialized, config) for config in configs]
            results = await asyncio.gather(*futures)

    first = configs[0]
    homogeneous = first.scenario.build(first.grid.domain).homogeneous
    summary = summarize([SweepRecord.deserialize(result) for result in results], homogeneous)
    LOG.info("Sweep verdict: %s (%s)", summary.verdict.value, summary.regime)
    return summary

