from dataclasses import replace
from pathlib import Path

import pytest
from tomlkit import loads

from kato.flow.snapshot import read_snapshot
from kato.lab.config import GridSpec, RunConfig, ScenarioSpec, SweepConfig
from kato.lab.records import SweepRecord
from kato.lab.report import DIAGNOSTIC_COLUMNS, read_csv
from kato.lab.sweep import (
    DIAGNOSTICS_FILE,
    FITTED_QUANTITIES,
    HOMOGENEOUS_REGIME,
    INHOMOGENEOUS_REGIME,
    RECORD_FILE,
    SNAPSHOT_DIR,
    Verdict,
    _check_sweep,
    run_single,
    run_sweep,
    summarize,
)
from kato.util.exceptions import ConfigError, ResolutionError
from tests.kato.utils.helpers import power_law_records

NUS = (0.04, 0.02, 0.01, 0.005)


def _records(e_sup, kato_d, e2=None) -> list[SweepRecord]:
    e2 = e2 or [0.0] * len(NUS)
    return [
        SweepRecord(
            nu=nu,
            e1_final=energy,
            e2_final=second,
            e_sup=energy,
            kato_d=layer,
            diss_total=layer + 1.0,
            gronwall_max_violation=0.0,
            wall_clock=0.0,
        )
        for nu, energy, layer, second in zip(NUS, e_sup, kato_d, e2)
    ]


def _small_sweep(tmp_path: Path) -> SweepConfig:
    return SweepConfig(
        scenario=ScenarioSpec("steady_shear", {"amplitude": 1.0, "mode": 2}),
        nus=(0.1, 0.07, 0.05),
        grid=GridSpec(nx=4, ny=96, stretch=1.0),
        horizon=0.1,
        output_interval=0.05,
        output_dir=str(tmp_path / "sweep"),
    )


class TestRunSingle:
    def test_outputs(self, small_run_config: RunConfig):
        record = run_single(small_run_config)
        output_dir = Path(small_run_config.output_dir)

        rows = read_csv(output_dir / DIAGNOSTICS_FILE)
        assert len(rows) == 5
        assert tuple(rows[0]) == DIAGNOSTIC_COLUMNS
        assert float(rows[0]["t"]) == 0.0
        assert float(rows[-1]["t"]) == pytest.approx(0.2, abs=1e-12)
        assert float(rows[0]["e_total"]) == pytest.approx(0.0, abs=1e-20)

        saved = loads((output_dir / RECORD_FILE).read_text()).unwrap()
        assert SweepRecord.from_dict(saved) == record

        snapshots = sorted((output_dir / SNAPSHOT_DIR).iterdir())
        assert [path.name for path in snapshots] == [f"snapshot_{index:05d}.flow" for index in range(5)]
        assert read_snapshot(snapshots[-1]).time == pytest.approx(0.2, abs=1e-12)

    def test_record(self, small_run_config: RunConfig):
        record = run_single(small_run_config)
        assert record.nu == 0.05
        assert record.grid == "4x96@1"
        assert record.e2_final == 0.0
        assert record.e_sup > 0.0
        assert record.e_sup >= record.e1_final
        assert 0.0 < record.kato_d < record.diss_total
        assert record.energy_deficit == pytest.approx(0.0, abs=1e-10)

    def test_snapshots_optional(self, small_run_config: RunConfig):
        config = replace(small_run_config, write_snapshots=False)
        run_single(config)
        assert not (Path(config.output_dir) / SNAPSHOT_DIR).exists()

    def test_unresolved_layer(self, small_run_config: RunConfig):
        config = replace(small_run_config, grid=GridSpec(nx=4, ny=32))
        with pytest.raises(ResolutionError, match="cells per strip"):
            run_single(config)
        assert not Path(config.output_dir).exists()


class TestVerdict:
    def test_both_vanish(self):
        summary = summarize(power_law_records(1.0), homogeneous=True)
        assert summary.verdict is Verdict.CONSISTENT
        assert summary.fits["e_sup"].slope == pytest.approx(1.0, abs=1e-9)
        assert summary.fits["kato_d"].slope == pytest.approx(1.0, abs=1e-9)

    def test_both_persist(self):
        summary = summarize(power_law_records(0.0), homogeneous=True)
        assert summary.verdict is Verdict.CONSISTENT

    def test_energy_persists_while_layer_vanishes(self):
        summary = summarize(_records([0.3] * 4, [nu**0.5 for nu in NUS]), homogeneous=True)
        assert summary.verdict is Verdict.INCONSISTENT

    def test_layer_persists_while_energy_vanishes(self):
        summary = summarize(_records([2.0 * nu for nu in NUS], [0.1] * 4), homogeneous=True)
        assert summary.verdict is Verdict.INCONSISTENT

    def test_zero_series_counts_as_vanishing(self):
        summary = summarize(_records([0.0] * 4, [0.1] * 4), homogeneous=True)
        assert summary.fits["e_sup"] is None
        assert summary.verdict is Verdict.INCONSISTENT

    def test_all_zero(self):
        summary = summarize(_records([0.0] * 4, [0.0] * 4), homogeneous=True)
        assert summary.verdict is Verdict.TRIVIALLY_CONSISTENT

    def test_noisy_decay_is_not_a_trend(self):
        summary = summarize(_records([0.3, 0.01, 0.2, 0.002], [0.1] * 4), homogeneous=True)
        assert summary.verdict is Verdict.CONSISTENT


class TestSummary:
    def test_sorted_and_fitted(self):
        records = power_law_records(1.0)
        summary = summarize(list(reversed(records)), homogeneous=True)
        assert [record.nu for record in summary.records] == [0.04, 0.02, 0.01, 0.005]
        assert set(summary.fits) == set(FITTED_QUANTITIES)
        assert summary.fits["e2_final"] is None

    def test_regime_follows_scenario_density(self):
        assert summarize(power_law_records(), homogeneous=True).regime == HOMOGENEOUS_REGIME
        layered = summarize(_records([0.1] * 4, [0.1] * 4), homogeneous=False)
        assert all(record.e2_final == 0 for record in layered.records)
        assert layered.regime == INHOMOGENEOUS_REGIME

    def test_dumps(self):
        saved = loads(summarize(power_law_records(), homogeneous=True).dumps()).unwrap()
        assert saved["verdict"] == "CONSISTENT"
        assert saved["regime"] == HOMOGENEOUS_REGIME
        assert saved["fits"]["e2_final"] == {"degenerate": True}
        assert saved["fits"]["e_sup"]["slope"] == pytest.approx(1.0, abs=1e-9)
        assert saved["nus"] == [0.04, 0.02, 0.01, 0.005]


class TestCheckSweep:
    def test_orders_by_viscosity(self, tmp_path: Path):
        configs = _small_sweep(tmp_path).run_configs()
        assert [config.nu for config in _check_sweep(configs[::-1])] == [0.1, 0.07, 0.05]

    def test_too_few_runs(self, tmp_path: Path):
        with pytest.raises(ConfigError, match="at least 3"):
            _check_sweep(_small_sweep(tmp_path).run_configs()[:2])

    def test_shared_scenario(self, tmp_path: Path):
        configs = _small_sweep(tmp_path).run_configs()
        configs[1] = replace(configs[1], scenario=ScenarioSpec("rest"))
        with pytest.raises(ConfigError, match="scenario"):
            _check_sweep(configs)

    def test_shared_horizon(self, tmp_path: Path):
        configs = _small_sweep(tmp_path).run_configs()
        configs[2] = replace(configs[2], horizon=0.2)
        with pytest.raises(ConfigError, match="horizon"):
            _check_sweep(configs)

    def test_distinct_viscosities(self, tmp_path: Path):
        configs = _small_sweep(tmp_path).run_configs()
        configs[2] = replace(configs[2], nu=0.1)
        with pytest.raises(ConfigError, match="distinct"):
            _check_sweep(configs)


@pytest.mark.asyncio
async def test_sweep_in_process(tmp_path: Path):
    config = _small_sweep(tmp_path)
    summary = await run_sweep(config.run_configs(), workers=1)

    assert [record.nu for record in summary.records] == [0.1, 0.07, 0.05]
    assert summary.regime == HOMOGENEOUS_REGIME
    assert summary.verdict in set(Verdict)
    for run in config.run_configs():
        assert (Path(run.output_dir) / DIAGNOSTICS_FILE).is_file()
        assert (Path(run.output_dir) / RECORD_FILE).is_file()


@pytest.mark.asyncio
async def test_sweep_workers_agree(tmp_path: Path):
    serial_configs = _small_sweep(tmp_path / "serial").run_configs()
    pooled_configs = _small_sweep(tmp_path / "pooled").run_configs()
    serial = await run_sweep(serial_configs, workers=1)
    pooled = await run_sweep(pooled_configs, workers=3)

    def comparable(record: SweepRecord) -> SweepRecord:
        return replace(record, wall_clock=0.0)

    assert [comparable(record) for record in serial.records] == [comparable(record) for record in pooled.records]
    assert serial.verdict is pooled.verdict
    for one, many in zip(serial_configs, pooled_configs):
        table = (Path(one.output_dir) / DIAGNOSTICS_FILE).read_bytes()
        assert table
        assert table == (Path(many.output_dir) / DIAGNOSTICS_FILE).read_bytes()


@pytest.mark.asyncio
async def test_layered_sweep_is_inhomogeneous(tmp_path: Path):
    config = replace(
        _small_sweep(tmp_path),
        scenario=ScenarioSpec("steady_shear", {"amplitude": 1.0, "mode": 2, "rho_contrast": 0.5}),
    )
    summary = await run_sweep(config.run_configs(), workers=1)
    assert all(record.e2_final == 0 for record in summary.records)
    assert summary.regime == INHOMOGENEOUS_REGIME
