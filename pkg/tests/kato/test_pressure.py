import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kato.flow.pressure import (
    apply_variable_laplacian,
    face_densities,
    poisson_residual,
    project,
    project_initial_velocity,
    solve_variable_poisson,
)
from kato.flow.state import momentum_pairing
from kato.mesh.fields import NodeField, ScalarField, curl_of_scalar, divergence, face_square_density
from kato.mesh.geometry import Domain, Grid, build_grid
from kato.util.exceptions import PoissonConvergenceError
from tests.kato.utils.helpers import channel_grids, random_velocity


def _density(grid: Grid, seed: int = 0, contrast: float = 0.5) -> ScalarField:
    rng = np.random.default_rng(seed)
    return ScalarField(grid, 1.0 + contrast * rng.uniform(size=(grid.nx, grid.ny)))


def _zero_mean(grid: Grid, values: np.ndarray) -> np.ndarray:
    return values - grid.integrate(values) / grid.domain.area


class TestFaceDensities:
    def test_constant_density(self, stretched_grid: Grid):
        rho_x, rho_y = face_densities(ScalarField(stretched_grid, np.full((8, 64), 2.0)))
        assert np.allclose(rho_x, 2.0)
        assert np.allclose(rho_y, 2.0)

    @given(grid=channel_grids(), seed=st.integers(min_value=0, max_value=2**16))
    @settings(max_examples=40)
    def test_face_energy_equals_cell_energy(self, grid: Grid, seed: int):
        rho = _density(grid, seed)
        vel = random_velocity(grid, seed)
        cell_energy = grid.integrate(rho.values * face_square_density(vel))
        assert momentum_pairing(rho, vel, vel) == pytest.approx(cell_energy, rel=1e-12)


class TestPoisson:
    def test_recovers_manufactured_pressure(self, unit_domain: Domain):
        grid = build_grid(unit_domain, nx=16, ny=24, stretch=1.0)
        rho = _density(grid, 1)
        rng = np.random.default_rng(2)
        truth = ScalarField(grid, _zero_mean(grid, rng.normal(size=(grid.nx, grid.ny))))
        rhs = apply_variable_laplacian(rho, truth)
        pressure = solve_variable_poisson(rho, rhs, tol=1e-11)
        assert poisson_residual(rho, pressure, rhs) <= 1e-10
        assert grid.integrate(pressure.values) == pytest.approx(0.0, abs=1e-12)
        assert np.max(np.abs(pressure.values - truth.values)) <= 1e-4 * np.max(np.abs(truth.values))

    def test_zero_right_hand_side(self, uniform_grid: Grid):
        pressure = solve_variable_poisson(_density(uniform_grid), ScalarField.zeros(uniform_grid))
        assert not np.any(pressure.values)

    def test_rejects_incompatible_right_hand_side(self, uniform_grid: Grid):
        rhs = ScalarField(uniform_grid, np.ones((uniform_grid.nx, uniform_grid.ny)))
        with pytest.raises(ValueError):
            solve_variable_poisson(_density(uniform_grid), rhs)

    def test_rejects_non_positive_density(self, uniform_grid: Grid):
        rho = ScalarField(uniform_grid, np.zeros((uniform_grid.nx, uniform_grid.ny)))
        with pytest.raises(ValueError):
            solve_variable_poisson(rho, ScalarField.zeros(uniform_grid))

    def test_reports_missed_tolerance(self, uniform_grid: Grid):
        rng = np.random.default_rng(3)
        rhs = ScalarField(uniform_grid, _zero_mean(uniform_grid, rng.normal(size=(8, 32))))
        with pytest.raises(PoissonConvergenceError) as err:
            solve_variable_poisson(_density(uniform_grid), rhs, tol=1e-14, maxiter=1)
        assert err.value.residual > 1e-14
        assert 1 <= err.value.iterations <= 4


class TestProjection:
    def test_projection_removes_divergence(self, unit_domain: Domain):
        grid = build_grid(unit_domain, nx=16, ny=16)
        rho = _density(grid, 4)
        vel = random_velocity(grid, 5)
        before = np.max(np.abs(divergence(vel).values))
        projected, _ = project(rho, vel, 0.1, 1e-11)
        assert before > 1e-3
        assert np.max(np.abs(divergence(projected).values)) <= 1e-7 * before
        assert projected.no_penetration

    def test_projection_does_not_add_energy(self, unit_domain: Domain):
        grid = build_grid(unit_domain, nx=16, ny=16, stretch=1.5)
        rho = _density(grid, 6)
        vel = random_velocity(grid, 7)
        projected, _ = project(rho, vel, 1.0, 1e-11)
        assert momentum_pairing(rho, projected, projected) <= momentum_pairing(rho, vel, vel) * (1 + 1e-9)

    def test_initial_projection_enforces_no_slip(self, uniform_grid: Grid):
        vel = random_velocity(uniform_grid, 8).with_walls((1.0, 2.0))
        admissible, correction = project_initial_velocity(_density(uniform_grid), vel)
        assert admissible.wall_u == (0.0, 0.0)
        assert not np.any(admissible.v[:, [0, -1]])
        assert correction > 0

    def test_initial_projection_keeps_solenoidal_field(self, uniform_grid: Grid):
        x, y = uniform_grid.nodes()
        psi = np.sin(np.pi * y) ** 2 * np.cos(2 * np.pi * x)
        psi[:, [0, -1]] = 0.0
        vel = curl_of_scalar(NodeField(uniform_grid, psi))
        admissible, correction = project_initial_velocity(_density(uniform_grid), vel)
        assert correction < 1e-10
        assert np.allclose(admissible.u, vel.u, atol=1e-10)
