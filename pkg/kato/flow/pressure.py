"""Variable-coefficient pressure Poisson solve and the projection built on it."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from kato.mesh.fields import ScalarField, VectorField, divergence, l2_norm
from kato.mesh.geometry import Grid
from kato.util.exceptions import PoissonConvergenceError
from kato.util.log import LOG

MAX_RESTARTS = 3


def face_densities(rho: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """
    Densities on the velocity faces.

    x-faces take the mean of the two neighbouring cells. Interior y-faces take the
    height-weighted mean, so that the face-weighted kinetic energy equals the
    cell-weighted one. Wall y-faces copy the adjacent cell.
    """
    grid = rho.grid
    values = rho.values
    dy = grid.dy
    rho_x = 0.5 * (values + np.roll(values, 1, axis=0))
    rho_y = np.empty((grid.nx, grid.ny + 1))
    rho_y[:, 1:-1] = (values[:, :-1] * dy[:-1] + values[:, 1:] * dy[1:]) / (dy[:-1] + dy[1:])
    rho_y[:, 0] = values[:, 0]
    rho_y[:, -1] = values[:, -1]
    return rho_x, rho_y


def _assemble(grid: Grid, rho: ScalarField) -> sp.csr_matrix:
    """
    Symmetric positive semi-definite matrix A with (A p)_c = -area_c * div((1/rho) grad p)_c.

    Cells are numbered i * ny + j. Walls carry no flux, so constants span the kernel.
    """
    nx, ny = grid.nx, grid.ny
    rho_x, rho_y = face_densities(rho)
    index = np.arange(nx * ny).reshape(nx, ny)

    x_weight = grid.dy[None, :] / (rho_x * grid.x_spacing)
    x_left = np.roll(index, 1, axis=0).ravel()
    x_right = index.ravel()

    y_weight = grid.x_spacing / (rho_y[:, 1:-1] * grid.dy_faces[None, 1:-1])
    y_low = index[:, :-1].ravel()
    y_high = index[:, 1:].ravel()

    first = np.concatenate([x_left, y_low])
    second = np.concatenate([x_right, y_high])
    weight = np.concatenate([x_weight.ravel(), y_weight.ravel()])

    rows = np.concatenate([first, second, first, second])
    cols = np.concatenate([second, first, first, second])
    data = np.concatenate([-weight, -weight, weight, weight])
    return sp.coo_matrix((data, (rows, cols)), shape=(nx * ny, nx * ny)).tocsr()


def apply_variable_laplacian(rho: ScalarField, p: ScalarField) -> ScalarField:
    """div((1/rho) grad p) per cell."""
    grid = rho.grid
    matrix = _assemble(grid, rho)
    flat = -(matrix @ p.values.ravel())
    return ScalarField(grid, flat.reshape(grid.nx, grid.ny) / grid.cell_areas)


def poisson_residual(rho: ScalarField, p: ScalarField, rhs: ScalarField) -> float:
    """Area-weighted relative residual of div((1/rho) grad p) = rhs."""
    grid = rho.grid
    target = grid.cell_areas * rhs.values
    scale = np.linalg.norm(target)
    if scale == 0:
        return float(np.linalg.norm(grid.cell_areas * apply_variable_laplacian(rho, p).values))
    defect = grid.cell_areas * (apply_variable_laplacian(rho, p).values - rhs.values)
    return float(np.linalg.norm(defect) / scale)


def solve_variable_poisson(
    rho: ScalarField,
    rhs: ScalarField,
    tol: float = 1e-10,
    maxiter: int | None = None,
) -> ScalarField:
    """
    Solve div((1/rho) grad p) = rhs with zero-flux walls and periodic x.

    Args:
        rho (ScalarField): Positive density.
        rhs (ScalarField): Right-hand side with zero integral.
        tol (float): Relative residual target.
        maxiter (int | None): Iteration cap per CG attempt; defaults to 10 * cell count.

    Returns:
        ScalarField: Pressure with zero area-weighted mean.

    Raises:
        ValueError: If rhs is not compatible or rho is not positive.
        PoissonConvergenceError: If the residual target is missed after restarts.
    """
    grid = rho.grid
    if not tol > 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")
    if np.min(rho.values) <= 0:
        raise ValueError("Density must be positive")

    target = grid.cell_areas * rhs.values
    net = float(np.sum(target))
    if abs(net) > 1e-10 * max(1.0, float(np.sum(np.abs(target)))):
        raise ValueError(f"Poisson right-hand side is incompatible: integral {net:.3e}")
    if not np.any(target):
        return ScalarField.zeros(grid)

    matrix = _assemble(grid, rho)
    b = -target.ravel()
    b -= b.mean()
    preconditioner = sp.diags(1.0 / matrix.diagonal())
    maxiter = maxiter or 10 * grid.nx * grid.ny
    b_norm = np.linalg.norm(b)

    x = np.zeros_like(b)
    residual = np.inf
    iterations = 0
    for attempt in range(MAX_RESTARTS + 1):
        counter = _IterationCounter()
        x, _ = spla.cg(
            matrix, b, x0=x, rtol=tol, atol=0.0, maxiter=maxiter, M=preconditioner, callback=counter
        )
        iterations += counter.count
        residual = float(np.linalg.norm(b - matrix @ x) / b_norm)
        if residual <= tol:
            break
        LOG.debug("Pressure solve restart %d, residual %.3e", attempt + 1, residual)
    else:
        raise PoissonConvergenceError(residual, iterations)

    p = x.reshape(grid.nx, grid.ny)
    p = p - grid.integrate(p) / grid.domain.area
    return ScalarField(grid, p)


class _IterationCounter:
    def __init__(self) -> None:
        self.count = 0

    def __call__(self, _xk) -> None:
        self.count += 1


def pressure_gradient(p: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Face gradient of p with zero normal component on the walls."""
    grid = p.grid
    gx = (p.values - np.roll(p.values, 1, axis=0)) / grid.x_spacing
    gy = np.zeros((grid.nx, grid.ny + 1))
    gy[:, 1:-1] = np.diff(p.values, axis=1) / grid.dy_faces[1:-1]
    return gx, gy


def project(
    rho: ScalarField, vel: VectorField, dt: float, tol: float
) -> tuple[VectorField, ScalarField]:
    """
    Remove the divergent part of vel: u = u* - (dt/rho) grad p with
    div((1/rho) grad p) = div(u*) / dt.

    Returns:
        tuple[VectorField, ScalarField]: The projected velocity and the pressure.
    """
    rhs = divergence(vel).values / dt
    rhs = rhs - rho.grid.integrate(rhs) / rho.grid.domain.area
    pressure = solve_variable_poisson(rho, ScalarField(rho.grid, rhs), tol)
    gx, gy = pressure_gradient(pressure)
    rho_x, rho_y = face_densities(rho)
    u = vel.u - dt * gx / rho_x
    v = vel.v - dt * gy / rho_y
    v[:, 0] = 0.0
    v[:, -1] = 0.0
    return VectorField(rho.grid, u, v, vel.wall_u), pressure


def project_initial_velocity(
    rho: ScalarField, vel: VectorField, tol: float = 1e-10
) -> tuple[VectorField, float]:
    """
    Make initial data admissible: zero wall rows and wall velocity, then project.

    Returns:
        tuple[VectorField, float]: The admissible field and the L2 size of the correction.
    """
    v = vel.v.copy()
    v[:, 0] = 0.0
    v[:, -1] = 0.0
    sealed = VectorField(rho.grid, vel.u, v, (0.0, 0.0))
    projected, _ = project(rho, sealed, 1.0, tol)
    correction = l2_norm(
        VectorField(rho.grid, projected.u - vel.u, projected.v - vel.v, no_penetration=False)
    )
    if correction > 0:
        LOG.info("Initial velocity corrected by %.3e in L2", correction)
    return projected, correction
