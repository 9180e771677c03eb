from __future__ import annotations

import math
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import trapezoid
from scipy.linalg import solve_banded

from kato.flow.pressure import face_densities, project
from kato.flow.state import EnergyLedger, FlowState, momentum_pairing
from kato.flow.transport import advective_dt, muscl_values
from kato.mesh.fields import (
    ScalarField,
    VectorField,
    gradient,
    gradient_inner,
    gradient_inner_parts,
    gradient_tensor,
    node_derivatives,
)
from kato.mesh.geometry import Grid
from kato.util.exceptions import NonFiniteStateError
from kato.util.log import LOG


def stable_dt(state: FlowState, cfl: float = 0.5, dt_max: float = 0.01) -> float:
    """Advective step limit of the state, capped at dt_max."""
    return advective_dt(state.vel, cfl, dt_max)


def advect_density(state: FlowState, dt: float) -> ScalarField:
    return ScalarField(state.grid, muscl_values(state.rho, state.vel, dt), state.rho.wall_values)


def momentum_advection(vel: VectorField) -> tuple[np.ndarray, np.ndarray]:
    """Centred advective-form (u . grad) u on the faces; zero on the wall rows of v."""
    grid = vel.grid
    u, v = vel.u, vel.v
    dx = grid.x_spacing

    dyu, _ = node_derivatives(vel)
    du_dx = (np.roll(u, -1, axis=0) - np.roll(u, 1, axis=0)) / (2.0 * dx)
    du_dy = 0.5 * (dyu[:, :-1] + dyu[:, 1:])
    v_rows = v[:, :-1] + v[:, 1:]
    v_at_u = 0.25 * (v_rows + np.roll(v_rows, 1, axis=0))
    adv_u = u * du_dx + v_at_u * du_dy

    u_rows = u[:, :-1] + u[:, 1:]
    u_at_v = 0.25 * (u_rows + np.roll(u_rows, -1, axis=0))
    dv_dx = (np.roll(v, -1, axis=0) - np.roll(v, 1, axis=0))[:, 1:-1] / (2.0 * dx)
    centre_dv_dy = np.diff(v, axis=1) / grid.dy
    dv_dy = 0.5 * (centre_dv_dy[:, :-1] + centre_dv_dy[:, 1:])
    adv_v = np.zeros_like(v)
    adv_v[:, 1:-1] = u_at_v * dv_dx + v[:, 1:-1] * dv_dy
    return adv_u, adv_v


def _periodic_second_difference(n: int, spacing: float) -> sp.csr_matrix:
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    matrix = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    matrix[0, n - 1] = 1.0
    matrix[n - 1, 0] = 1.0
    return matrix.tocsr() / spacing**2


@dataclass(frozen=True)
class _WallTridiagonal:
    """Second difference across the channel; the diagonal balances both neighbours."""

    lower: np.ndarray
    upper: np.ndarray

    @property
    def main(self) -> np.ndarray:
        return -(self.lower + self.upper)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Apply to every column (second axis) of values."""
        applied = self.main * values
        applied[:, 1:] += self.lower[1:] * values[:, :-1]
        applied[:, :-1] += self.upper[:-1] * values[:, 1:]
        return applied

    def crank_nicolson(
        self, values: np.ndarray, density: np.ndarray, half_diffusion: float
    ) -> np.ndarray:
        """Solve rho (x - b) = h T (x + b) column by column with one banded solve each."""
        rhs = density * values + half_diffusion * self.apply(values)
        banded = np.zeros((3, values.shape[1]))
        banded[0, 1:] = -half_diffusion * self.upper[:-1]
        banded[2, :-1] = -half_diffusion * self.lower[1:]
        diagonal = -half_diffusion * self.main
        solved = np.empty_like(values)
        for i, (column_density, column_rhs) in enumerate(zip(density, rhs)):
            banded[1] = column_density + diagonal
            solved[i] = solve_banded((1, 1), banded, column_rhs)
        return solved


@dataclass(frozen=True)
class _ViscousOperators:
    u_x: sp.csr_matrix
    u_y: _WallTridiagonal
    v_x: sp.csr_matrix
    v_y: _WallTridiagonal


@lru_cache(maxsize=8)
def _viscous_operators(grid: Grid) -> _ViscousOperators:
    """MAC Laplacian split by direction, for u (all rows) and v (interior rows)."""
    dy = grid.dy
    dyc = grid.dy_faces
    periodic = _periodic_second_difference(grid.nx, grid.x_spacing)
    return _ViscousOperators(
        u_x=sp.kron(periodic, sp.identity(grid.ny), format="csr"),
        u_y=_WallTridiagonal(1.0 / (dyc[:-1] * dy), 1.0 / (dyc[1:] * dy)),
        v_x=sp.kron(periodic, sp.identity(grid.ny - 1), format="csr"),
        v_y=_WallTridiagonal(1.0 / (dy[:-1] * dyc[1:-1]), 1.0 / (dy[1:] * dyc[1:-1])),
    )


def _crank_nicolson(
    values: np.ndarray, density: np.ndarray, laplacian: sp.csr_matrix, half_diffusion: float
) -> np.ndarray:
    """Solve rho (x - b) = h L (x + b) for x."""
    flat = values.ravel()
    weight = density.ravel()
    lhs = sp.diags(weight) - half_diffusion * laplacian
    rhs = weight * flat + half_diffusion * (laplacian @ flat)
    return spla.spsolve(lhs.tocsc(), rhs).reshape(values.shape)


def _x_invariant(*arrays: np.ndarray) -> bool:
    return all(not np.any(array - array[:1]) for array in arrays)


def _viscous_stage(
    grid: Grid,
    u: np.ndarray,
    v: np.ndarray,
    rho_x: np.ndarray,
    rho_y: np.ndarray,
    half_diffusion: float,
    along_x: bool,
) -> tuple[np.ndarray, np.ndarray, VectorField]:
    """
    One Crank-Nicolson sweep in a single direction.

    Returns:
        tuple: The new u, the new v and the time-centred field of the sweep.
    """
    operators = _viscous_operators(grid)
    new_v = np.zeros_like(v)
    if along_x and _x_invariant(u, v, rho_x, rho_y):
        new_u, new_v = u, v
    elif along_x:
        new_u = _crank_nicolson(u, rho_x, operators.u_x, half_diffusion)
        new_v[:, 1:-1] = _crank_nicolson(v[:, 1:-1], rho_y[:, 1:-1], operators.v_x, half_diffusion)
    else:
        new_u = operators.u_y.crank_nicolson(u, rho_x, half_diffusion)
        new_v[:, 1:-1] = operators.v_y.crank_nicolson(v[:, 1:-1], rho_y[:, 1:-1], half_diffusion)
    centred = VectorField(grid, 0.5 * (u + new_u), 0.5 * (v + new_v))
    return new_u, new_v, centred


def _require_finite(step_index: int, time: float, *arrays: np.ndarray) -> None:
    for array in arrays:
        if not np.all(np.isfinite(array)):
            raise NonFiniteStateError(step_index, time)


def step(
    state: FlowState,
    dt: float,
    ledger: EnergyLedger | None = None,
    *,
    poisson_tol: float = 1e-10,
    step_index: int = 0,
) -> FlowState:
    """
    Advance the state by one time step.

    The density is transported first. The momentum predictor adds explicit centred
    advection and Crank-Nicolson viscosity, split into an x sweep and a y sweep.
    A variable-density projection then restores incompressibility. The ledger, if
    given, receives nu * dt * int |grad u|^2 of both sweeps at their time-centred
    velocities, which is exactly the kinetic energy each sweep removes.

    Raises:
        StepRejectedError: If dt violates the advective CFL limit.
        PoissonConvergenceError: If the projection fails.
        NonFiniteStateError: If the step produced NaN or Inf.
    """
    if not dt > 0:
        raise ValueError(f"Time step must be positive, got {dt}")
    grid = state.grid
    time = state.time + dt
    nu = state.viscosity

    rho = advect_density(state, dt)
    _require_finite(step_index, time, rho.values)
    rho_x, rho_y = face_densities(rho)

    adv_u, adv_v = momentum_advection(state.vel)
    u = state.vel.u - dt * adv_u
    v = state.vel.v - dt * adv_v

    half_diffusion = 0.5 * nu * dt
    u, v, centred_x = _viscous_stage(grid, u, v, rho_x, rho_y, half_diffusion, along_x=True)
    u, v, centred_y = _viscous_stage(grid, u, v, rho_x, rho_y, half_diffusion, along_x=False)
    _require_finite(step_index, time, u, v)

    vel, pressure = project(rho, VectorField(grid, u, v), dt, poisson_tol)
    _require_finite(step_index, time, vel.u, vel.v, pressure.values)
    new_state = FlowState(rho, vel, pressure, time, nu)

    if ledger is not None:
        x_part, _ = gradient_inner_parts(centred_x, centred_x)
        _, y_part = gradient_inner_parts(centred_y, centred_y)
        rate = x_part + y_part
        ledger.record(
            time,
            new_state.kinetic_energy,
            nu * dt * grid.integrate(rate),
            nu * dt * grid.integrate(rate * ledger.mask.weights),
        )
    return new_state


def trajectory(
    state: FlowState,
    horizon: float,
    output_interval: float,
    ledger: EnergyLedger | None = None,
    *,
    cfl: float = 0.5,
    dt_max: float = 0.01,
    poisson_tol: float = 1e-10,
) -> Iterator[FlowState]:
    """
    Yield the state at every multiple of output_interval up to the horizon, starting
    with the given state.

    Steps inside one interval are equal and no longer than stable_dt allows.

    Raises:
        ValueError: If the horizon is not a whole number of output intervals.
    """
    if not horizon > 0 or not output_interval > 0:
        raise ValueError("horizon and output_interval must be positive")
    outputs = horizon / output_interval
    count = round(outputs)
    if count < 1 or abs(outputs - count) > 1e-9 * max(1.0, outputs):
        raise ValueError(
            f"horizon {horizon} is not a whole number of output intervals {output_interval}"
        )
    if ledger is not None and not ledger.times:
        ledger.start(state)

    start = state.time
    step_index = 0
    yield state
    for k in range(1, count + 1):
        target = start + horizon if k == count else start + k * output_interval
        remaining = target - state.time
        limit = stable_dt(state, cfl, dt_max)
        steps = max(1, math.ceil(remaining / limit * (1.0 - 1e-12)))
        for n in range(steps):
            dt = remaining / steps if n < steps - 1 else target - state.time
            step_index += 1
            state = step(state, dt, ledger, poisson_tol=poisson_tol, step_index=step_index)
        LOG.debug(
            "t=%.6g after %d steps, kinetic energy %.6e", state.time, step_index, state.kinetic_energy
        )
        yield state


def _one(_t: float) -> float:
    return 1.0


def _zero(_t: float) -> float:
    return 0.0


@dataclass(frozen=True)
class WeakTestFunction:
    """
    Separable test function chi(t) * phi(x).

    Attributes:
        field (VectorField | ScalarField): Spatial part phi.
        profile (Callable[[float], float]): Temporal factor chi.
        rate (Callable[[float], float]): Its derivative chi'.
    """

    field: VectorField | ScalarField
    profile: Callable[[float], float] = _one
    rate: Callable[[float], float] = _zero


@dataclass(frozen=True)
class WeakResiduals:
    momentum: float
    transport: float


def _convective_pairing(state: FlowState, phi: VectorField) -> float:
    """int rho (u (x) u) : grad phi at the cell centers."""
    u, v = state.vel.cell_velocity()
    grad = gradient_tensor(phi)
    density = (
        u * u * grad[0, 0] + u * v * grad[0, 1] + v * u * grad[1, 0] + v * v * grad[1, 1]
    )
    return state.grid.integrate(state.rho.values * density)


def weak_residuals(
    trajectory: Sequence[FlowState], test_field: WeakTestFunction, test_scalar: WeakTestFunction
) -> WeakResiduals:
    """
    Residuals of the time-integrated weak momentum and transport equations.

    The momentum residual is
        [chi <rho u, phi>]_0^T - int (chi' <rho u, phi> + chi <rho u (x) u, grad phi>
                                      - nu chi <grad u, grad phi>) dt
    and the transport residual is
        [chi <rho, theta>]_0^T - int (chi' <rho, theta> + chi <rho u, grad theta>) dt,
    both integrated in time with the trapezoidal rule over the stored states.

    Raises:
        ValueError: If fewer than two states are given.
    """
    if len(trajectory) < 2:
        raise ValueError("weak residuals need at least two states")
    phi = test_field.field
    theta = test_scalar.field
    grad_theta = gradient(theta)

    times = np.array([state.time for state in trajectory])
    momentum_integrand = []
    transport_integrand = []
    momentum_ends = []
    transport_ends = []
    for state in trajectory:
        chi, chi_rate = test_field.profile(state.time), test_field.rate(state.time)
        pairing = momentum_pairing(state.rho, state.vel, phi)
        viscous = state.grid.integrate(gradient_inner(state.vel, phi).values)
        momentum_integrand.append(
            chi_rate * pairing + chi * (_convective_pairing(state, phi) - state.viscosity * viscous)
        )
        momentum_ends.append(chi * pairing)

        chi, chi_rate = test_scalar.profile(state.time), test_scalar.rate(state.time)
        mass = state.grid.integrate(state.rho.values * theta.values)
        flux = momentum_pairing(state.rho, state.vel, grad_theta)
        transport_integrand.append(chi_rate * mass + chi * flux)
        transport_ends.append(chi * mass)

    momentum = momentum_ends[-1] - momentum_ends[0] - trapezoid(momentum_integrand, times)
    transport = transport_ends[-1] - transport_ends[0] - trapezoid(transport_integrand, times)
    return WeakResiduals(float(momentum), float(transport))
