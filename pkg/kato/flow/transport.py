from __future__ import annotations

import numpy as np

from kato.mesh.fields import ScalarField, VectorField
from kato.util.exceptions import StepRejectedError


def minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(a * b > 0.0, np.where(np.abs(a) < np.abs(b), a, b), 0.0)


def cfl_number(vel: VectorField, dt: float) -> float:
    grid = vel.grid
    return float(dt * (np.max(np.abs(vel.u)) / grid.x_spacing + np.max(np.abs(vel.v)) / grid.min_dy))


def advective_dt(vel: VectorField, cfl: float, dt_max: float) -> float:
    """
    Largest step with advective CFL number `cfl`; the viscous term is implicit.

    The Courant numbers of both directions are summed, so the step never exceeds
    cfl * min(dx / max|u|, min dy / max|v|) and equals it when one component vanishes.

    Raises:
        ValueError: If cfl is not in (0, 1] or dt_max is not positive.
    """
    if not 0.0 < cfl <= 1.0:
        raise ValueError(f"CFL number must lie in (0, 1], got {cfl}")
    if not dt_max > 0:
        raise ValueError(f"dt_max must be positive, got {dt_max}")
    grid = vel.grid
    rate = np.max(np.abs(vel.u)) / grid.x_spacing + np.max(np.abs(vel.v)) / grid.min_dy
    if rate == 0:
        return dt_max
    return float(min(cfl / rate, dt_max))


def _x_face_values(rho: np.ndarray, u: np.ndarray, dt: float, dx: float) -> np.ndarray:
    # face i sits between cells i-1 and i
    slope = minmod(rho - np.roll(rho, 1, axis=0), np.roll(rho, -1, axis=0) - rho)
    courant = u * dt / dx
    from_left = np.roll(rho + 0.5 * slope, 1, axis=0) - 0.5 * courant * np.roll(slope, 1, axis=0)
    from_right = rho - 0.5 * slope - 0.5 * courant * slope
    return np.where(u > 0, from_left, from_right)


def _y_face_values(
    rho: np.ndarray, v: np.ndarray, dt: float, dy: np.ndarray, dy_faces: np.ndarray
) -> np.ndarray:
    gradient = np.diff(rho, axis=1) / dy_faces[None, 1:-1]
    slope = np.zeros_like(rho)
    slope[:, 1:-1] = minmod(gradient[:, :-1], gradient[:, 1:])

    faces = np.zeros_like(v)
    inner_v = v[:, 1:-1]
    below = rho[:, :-1] + slope[:, :-1] * (0.5 * dy[None, :-1] - 0.5 * inner_v * dt)
    above = rho[:, 1:] - slope[:, 1:] * (0.5 * dy[None, 1:] + 0.5 * inner_v * dt)
    faces[:, 1:-1] = np.where(inner_v > 0, below, above)
    return faces


def muscl_values(rho: ScalarField, vel: VectorField, dt: float) -> np.ndarray:
    """
    Density after one conservative MUSCL step of d_t rho + div(rho u) = 0.

    Face states are time-centred minmod reconstructions from the upwind cell; the
    cells touching a wall are reconstructed flat.

    Raises:
        StepRejectedError: If the combined CFL number exceeds one.
    """
    grid = rho.grid
    courant = cfl_number(vel, dt)
    if courant > 1.0 + 1e-12:
        raise StepRejectedError(courant)

    values = rho.values
    dx = grid.x_spacing
    dy = grid.dy

    flux_x = vel.u * _x_face_values(values, vel.u, dt, dx) * dy[None, :]
    flux_y = vel.v * _y_face_values(values, vel.v, dt, dy, grid.dy_faces) * dx

    net = (np.roll(flux_x, -1, axis=0) - flux_x) + np.diff(flux_y, axis=1)
    return values - dt * net / grid.cell_areas


def muscl_update(rho: ScalarField, vel: VectorField, dt: float) -> ScalarField:
    return ScalarField(rho.grid, muscl_values(rho, vel, dt), rho.wall_values)
