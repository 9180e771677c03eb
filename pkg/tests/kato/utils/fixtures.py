import pytest

from kato.lab.config import GridSpec, RunConfig, ScenarioSpec
from kato.mesh.geometry import Domain, Grid, build_grid
from kato.theory.euler import EulerSolution, rest, steady_shear


@pytest.fixture
def unit_domain() -> Domain:
    return Domain()


@pytest.fixture
def uniform_grid(unit_domain: Domain) -> Grid:
    return build_grid(unit_domain, nx=8, ny=32)


@pytest.fixture
def stretched_grid(unit_domain: Domain) -> Grid:
    return build_grid(unit_domain, nx=8, ny=64, stretch=2.0)


@pytest.fixture
def heat_decay() -> EulerSolution:
    return steady_shear(amplitude=1.0, mode=2)


@pytest.fixture
def layered_heat_decay() -> EulerSolution:
    return steady_shear(amplitude=1.0, mode=2, rho_contrast=0.5)


@pytest.fixture
def resting() -> EulerSolution:
    return rest()


@pytest.fixture
def small_run_config(tmp_path) -> RunConfig:
    return RunConfig(
        scenario=ScenarioSpec("steady_shear", {"amplitude": 1.0, "mode": 2}),
        nu=0.05,
        grid=GridSpec(nx=4, ny=96, stretch=1.0),
        horizon=0.2,
        output_interval=0.05,
        dt_max=0.01,
        output_dir=str(tmp_path / "run"),
        write_snapshots=True,
    )
