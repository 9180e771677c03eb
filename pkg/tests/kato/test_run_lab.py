from pathlib import Path

import pytest
from tomlkit import loads

from kato import run_lab
from kato.lab.config import CorrectorCheckConfig, GridSpec, InequalityConfig, RunConfig, ScenarioSpec, SweepConfig
from kato.lab.records import SweepRecord
from kato.lab.report import read_csv, write_sweep_csv
from kato.lab.sweep import summarize
from kato.run_lab import EXIT_CONFIG, EXIT_INCONSISTENT, EXIT_OK, EXIT_SOLVER, main
from kato.util.exceptions import LabError, PoissonConvergenceError
from tests.kato.utils.helpers import power_law_records


def _sweep_config(tmp_path: Path) -> Path:
    config = SweepConfig(
        scenario=ScenarioSpec("steady_shear", {"amplitude": 1.0, "mode": 2}),
        nus=(0.1, 0.07, 0.05),
        grid=GridSpec(nx=4, ny=96, stretch=1.0),
        horizon=0.1,
        output_interval=0.05,
        output_dir=str(tmp_path / "sweep"),
    )
    return config.dump(tmp_path / "sweep.toml")


class TestExitCodes:
    def test_missing_config(self, tmp_path: Path):
        assert main(["simulate", "-c", str(tmp_path / "absent.toml")]) == EXIT_CONFIG

    def test_invalid_config(self, tmp_path: Path):
        path = tmp_path / "sweep.toml"
        path.write_text('nus = [0.1, 0.05]\n\n[scenario]\nentry = "steady_shear"\n')
        assert main(["sweep", "-c", str(path)]) == EXIT_CONFIG

    def test_no_workers(self, tmp_path: Path):
        assert main(["-w", "0", "sweep", "-c", str(_sweep_config(tmp_path))]) == EXIT_CONFIG
        assert not (tmp_path / "sweep").exists()

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            main(["plot"])

    def test_solver_failure(self, tmp_path: Path, small_run_config: RunConfig, monkeypatch):
        def fail(config: RunConfig) -> SweepRecord:
            raise PoissonConvergenceError(1e-3, 500)

        monkeypatch.setattr(run_lab, "run_single", fail)
        path = small_run_config.dump(tmp_path / "run.json")
        assert main(["simulate", "-c", str(path)]) == EXIT_SOLVER

    def test_unexpected_lab_error(self, tmp_path: Path, small_run_config: RunConfig, monkeypatch):
        def fail(config: RunConfig) -> SweepRecord:
            raise LabError("broken run")

        monkeypatch.setattr(run_lab, "run_single", fail)
        path = small_run_config.dump(tmp_path / "run.toml")
        assert main(["simulate", "-c", str(path)]) == EXIT_SOLVER

    def test_inconsistent_sweep(self, tmp_path: Path, monkeypatch):
        records = [SweepRecord(nu, 0.3, 0.0, 0.3, nu**0.5, 1.0, 0.0, 0.0) for nu in (0.04, 0.02, 0.01, 0.005)]

        async def fake_sweep(configs, workers=None):
            return summarize(records, homogeneous=True)

        monkeypatch.setattr(run_lab, "run_sweep", fake_sweep)
        assert main(["-w", "1", "sweep", "-c", str(_sweep_config(tmp_path))]) == EXIT_INCONSISTENT
        summary = loads((tmp_path / "sweep" / run_lab.SUMMARY_FILE).read_text()).unwrap()
        assert summary["verdict"] == "INCONSISTENT"


class TestCommands:
    def test_simulate(self, tmp_path: Path, small_run_config: RunConfig, capsys):
        path = small_run_config.dump(tmp_path / "run.toml")
        assert main(["simulate", "-c", str(path)]) == EXIT_OK
        printed = loads(capsys.readouterr().out).unwrap()
        assert printed["nu"] == 0.05
        assert printed["grid"] == "4x96@1"
        assert (Path(small_run_config.output_dir) / "record.toml").is_file()

    def test_sweep(self, tmp_path: Path, capsys):
        assert main(["-w", "1", "sweep", "-c", str(_sweep_config(tmp_path))]) == EXIT_OK
        output_dir = tmp_path / "sweep"
        assert [float(row["nu"]) for row in read_csv(output_dir / run_lab.SWEEP_FILE)] == [0.1, 0.07, 0.05]
        assert (output_dir / run_lab.REPORT_FILE).is_file()
        assert (output_dir / "nu_0.07" / "diagnostics.csv").is_file()
        summary = loads((output_dir / run_lab.SUMMARY_FILE).read_text()).unwrap()
        assert summary["regime"] == "homogeneous regime"
        assert loads(capsys.readouterr().out).unwrap() == summary

    def test_report(self, tmp_path: Path, capsys):
        table = write_sweep_csv(tmp_path / "sweep.csv", power_law_records(1.0))
        assert main(["report", "-i", str(table), "-o", str(tmp_path / "chart.svg")]) == EXIT_OK
        assert capsys.readouterr().out.splitlines() == ["e_sup,1", "kato_d,1"]
        assert (tmp_path / "chart.svg").is_file()

    def test_report_missing_table(self, tmp_path: Path):
        assert main(["report", "-i", str(tmp_path / "absent.csv"), "-o", str(tmp_path / "chart.svg")]) == EXIT_CONFIG

    def test_corrector_check(self, tmp_path: Path):
        config = CorrectorCheckConfig(
            scenario=ScenarioSpec("steady_shear", {"profile": "cosine", "mode": 1}),
            grid=GridSpec(nx=4, ny=512, stretch=2.0),
            output_dir=str(tmp_path / "corrector"),
        )
        code = main(["corrector-check", "-c", str(config.dump(tmp_path / "corrector.toml"))])
        assert code in (EXIT_OK, EXIT_INCONSISTENT)
        rows = read_csv(tmp_path / "corrector" / run_lab.CORRECTOR_FILE)
        assert [float(row["nu"]) for row in rows] == [0.2, 0.1, 0.05, 0.025]
        summary = loads((tmp_path / "corrector" / run_lab.SUMMARY_FILE).read_text()).unwrap()
        assert summary["holds"] is (code == EXIT_OK)
        assert summary["l2"]["expected"] == 0.5

    def test_corrector_check_without_layer(self, tmp_path: Path):
        config = CorrectorCheckConfig(
            scenario=ScenarioSpec("rest"),
            grid=GridSpec(nx=4, ny=256, stretch=2.0),
            output_dir=str(tmp_path / "corrector"),
        )
        assert main(["corrector-check", "-c", str(config.dump(tmp_path / "corrector.json"))]) == EXIT_CONFIG

    def test_inequalities(self, tmp_path: Path, capsys):
        config = InequalityConfig(
            grid=GridSpec(nx=4, ny=1000),
            eps_list=(0.01, 0.02, 0.05, 0.1),
            count=2,
            output_dir=str(tmp_path / "inequalities"),
        )
        assert main(["inequalities", "-c", str(config.dump(tmp_path / "inequalities.toml"))]) == EXIT_OK
        rows = read_csv(tmp_path / "inequalities" / run_lab.INEQUALITY_FILE)
        assert len(rows) == 4 * (3 + 3 + 2)
        assert {row["family"] for row in rows} == {"distance_power", "sine", "random_bump"}
        assert capsys.readouterr().out.strip()
