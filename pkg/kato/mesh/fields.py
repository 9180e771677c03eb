from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kato.mesh.geometry import Grid, LayerMask
from kato.util.exceptions import BoundaryConditionError

WallPair = tuple[float, float]

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _checked(values, shape: tuple[int, ...], label: str) -> np.ndarray:
    array = np.asarray(values, dtype=np.float64)
    if array.shape != shape:
        raise ValueError(f"{label} has shape {array.shape}, expected {shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{label} contains non-finite values")
    return array


@dataclass(frozen=True, eq=False)
class ScalarField:
    """
    Cell-centered scalar.

    Attributes:
        grid (Grid): Owning grid.
        values (np.ndarray): Shape (nx, ny).
        wall_values (WallPair | None): Declared Dirichlet values at (y=0, y=L_y), or None.
    """

    grid: Grid
    values: np.ndarray
    wall_values: WallPair | None = None

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "values", _checked(self.values, (self.grid.nx, self.grid.ny), "scalar field")
        )

    def __add__(self, other: ScalarField) -> ScalarField:
        walls = _add_walls(self.wall_values, other.wall_values, 1.0)
        return ScalarField(self.grid, self.values + other.values, walls)

    def __sub__(self, other: ScalarField) -> ScalarField:
        walls = _add_walls(self.wall_values, other.wall_values, -1.0)
        return ScalarField(self.grid, self.values - other.values, walls)

    def scaled(self, factor: float) -> ScalarField:
        walls = _add_walls((0.0, 0.0), self.wall_values, factor)
        return ScalarField(self.grid, factor * self.values, walls)

    @classmethod
    def zeros(cls, grid: Grid, wall_values: WallPair | None = None) -> ScalarField:
        return cls(grid, np.zeros((grid.nx, grid.ny)), wall_values)


@dataclass(frozen=True, eq=False)
class NodeField:
    """Scalar on the cell corners, shape (nx, ny+1); used for stream functions."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "values", _checked(self.values, (self.grid.nx, self.grid.ny + 1), "node field")
        )


@dataclass(frozen=True, eq=False)
class VectorField:
    """
    Face-staggered vector.

    Attributes:
        grid (Grid): Owning grid.
        u (np.ndarray): x-component on vertical faces, shape (nx, ny).
        v (np.ndarray): y-component on horizontal faces, shape (nx, ny+1).
        wall_u (WallPair): Declared tangential velocity at (y=0, y=L_y).
        no_penetration (bool): Whether the v rows on both walls are required to vanish.
    """

    grid: Grid
    u: np.ndarray
    v: np.ndarray
    wall_u: WallPair = (0.0, 0.0)
    no_penetration: bool = True

    def __post_init__(self) -> None:
        nx, ny = self.grid.nx, self.grid.ny
        object.__setattr__(self, "u", _checked(self.u, (nx, ny), "x-velocity"))
        object.__setattr__(self, "v", _checked(self.v, (nx, ny + 1), "y-velocity"))
        object.__setattr__(self, "wall_u", (float(self.wall_u[0]), float(self.wall_u[1])))
        if self.no_penetration and (np.any(self.v[:, 0] != 0) or np.any(self.v[:, -1] != 0)):
            raise BoundaryConditionError("y-velocity must vanish on both walls")

    def __add__(self, other: VectorField) -> VectorField:
        return VectorField(
            self.grid,
            self.u + other.u,
            self.v + other.v,
            _add_walls(self.wall_u, other.wall_u, 1.0),
            self.no_penetration and other.no_penetration,
        )

    def __sub__(self, other: VectorField) -> VectorField:
        return VectorField(
            self.grid,
            self.u - other.u,
            self.v - other.v,
            _add_walls(self.wall_u, other.wall_u, -1.0),
            self.no_penetration and other.no_penetration,
        )

    def scaled(self, factor: float) -> VectorField:
        return VectorField(
            self.grid,
            factor * self.u,
            factor * self.v,
            (factor * self.wall_u[0], factor * self.wall_u[1]),
            self.no_penetration,
        )

    def with_walls(self, wall_u: WallPair) -> VectorField:
        return VectorField(self.grid, self.u, self.v, wall_u, self.no_penetration)

    def cell_velocity(self) -> tuple[np.ndarray, np.ndarray]:
        """Face averages at the cell centers."""
        return 0.5 * (self.u + np.roll(self.u, -1, axis=0)), 0.5 * (self.v[:, :-1] + self.v[:, 1:])

    @classmethod
    def zeros(cls, grid: Grid) -> VectorField:
        return cls(grid, np.zeros((grid.nx, grid.ny)), np.zeros((grid.nx, grid.ny + 1)))


def _add_walls(first, second, sign: float):
    if first is None or second is None:
        return None
    return (first[0] + sign * second[0], first[1] + sign * second[1])


def _lagrange_slope(nodes: tuple[float, float, float], at: float) -> np.ndarray:
    """Weights w such that sum(w * f(nodes)) is the derivative at `at` of the interpolating quadratic."""
    weights = np.zeros(3)
    for k in range(3):
        others = [nodes[m] for m in range(3) if m != k]
        denominator = (nodes[k] - others[0]) * (nodes[k] - others[1])
        weights[k] = ((at - others[1]) + (at - others[0])) / denominator
    return weights


def gradient(s: ScalarField) -> VectorField:
    """
    Gradient of a cell-centered scalar, landing on the faces.

    Interior wall-normal differences divide by the center-to-center distance, so affine
    fields are differentiated exactly on stretched grids. Wall rows use the quadratic
    through the declared wall value and the first two centers, or through the first
    three centers when no wall value is declared.
    """
    grid = s.grid
    values = s.values
    yc = grid.y_centers
    length_y = grid.domain.length_y

    gx = (values - np.roll(values, 1, axis=0)) / grid.x_spacing
    gy = np.empty((grid.nx, grid.ny + 1))
    gy[:, 1:-1] = np.diff(values, axis=1) / grid.dy_faces[1:-1]

    if s.wall_values is not None:
        bottom, top = s.wall_values
        w = _lagrange_slope((0.0, yc[0], yc[1]), 0.0)
        gy[:, 0] = w[0] * bottom + w[1] * values[:, 0] + w[2] * values[:, 1]
        w = _lagrange_slope((length_y, yc[-1], yc[-2]), length_y)
        gy[:, -1] = w[0] * top + w[1] * values[:, -1] + w[2] * values[:, -2]
    else:
        w = _lagrange_slope((yc[0], yc[1], yc[2]), 0.0)
        gy[:, 0] = values[:, :3] @ w
        w = _lagrange_slope((yc[-1], yc[-2], yc[-3]), length_y)
        gy[:, -1] = values[:, [-1, -2, -3]] @ w

    return VectorField(grid, gx, gy, no_penetration=False)


def divergence(v: VectorField) -> ScalarField:
    grid = v.grid
    flux_x = (np.roll(v.u, -1, axis=0) - v.u) / grid.x_spacing
    flux_y = np.diff(v.v, axis=1) / grid.dy
    return ScalarField(grid, flux_x + flux_y)


def curl_of_scalar(psi: NodeField, wall_u: WallPair = (0.0, 0.0)) -> VectorField:
    """
    Perpendicular gradient (d_y psi, -d_x psi) of a node-sampled stream function.

    Each face component is the difference of the two nodes bounding that face, so the
    result is discretely divergence-free for any psi.
    """
    grid = psi.grid
    values = psi.values
    u = np.diff(values, axis=1) / grid.dy
    v = -(np.roll(values, -1, axis=0) - values) / grid.x_spacing
    sealed = not (np.any(v[:, 0]) or np.any(v[:, -1]))
    return VectorField(grid, u, v, wall_u, no_penetration=sealed)


def node_derivatives(v: VectorField) -> tuple[np.ndarray, np.ndarray]:
    """d_y u and d_x v at the nodes, with the declared wall velocity closing d_y u."""
    grid = v.grid
    padded = np.empty((grid.nx, grid.ny + 2))
    padded[:, 1:-1] = v.u
    padded[:, 0] = v.wall_u[0]
    padded[:, -1] = v.wall_u[1]
    # the wall "neighbours" sit on the wall, half a cell away
    dyu = np.diff(padded, axis=1) / grid.dy_faces
    dxv = (v.v - np.roll(v.v, 1, axis=0)) / grid.x_spacing
    return dyu, dxv


def _nodes_to_cells(node_density: np.ndarray) -> np.ndarray:
    rows = 0.5 * (node_density[:, :-1] + node_density[:, 1:])
    return 0.5 * (rows + np.roll(rows, -1, axis=0))


def gradient_inner_parts(a: VectorField, b: VectorField) -> tuple[np.ndarray, np.ndarray]:
    """
    Cell densities of the x-derivative and y-derivative parts of grad(a):grad(b).

    Center terms are d_x u and d_y v; node terms are d_y u and d_x v averaged from the
    four corners. The integrals of these densities equal minus the weighted inner
    products with the MAC Laplacian, split by direction.
    """
    grid = a.grid
    dxu_a = (np.roll(a.u, -1, axis=0) - a.u) / grid.x_spacing
    dxu_b = (np.roll(b.u, -1, axis=0) - b.u) / grid.x_spacing
    dyv_a = np.diff(a.v, axis=1) / grid.dy
    dyv_b = np.diff(b.v, axis=1) / grid.dy
    dyu_a, dxv_a = node_derivatives(a)
    dyu_b, dxv_b = node_derivatives(b)

    x_part = dxu_a * dxu_b + _nodes_to_cells(dxv_a * dxv_b)
    y_part = dyv_a * dyv_b + _nodes_to_cells(dyu_a * dyu_b)
    return x_part, y_part


def gradient_inner(a: VectorField, b: VectorField) -> ScalarField:
    x_part, y_part = gradient_inner_parts(a, b)
    return ScalarField(a.grid, x_part + y_part)


def gradient_tensor_norms(v: VectorField) -> ScalarField:
    """Cell-centered dissipation density |grad v|^2."""
    return gradient_inner(v, v)


def gradient_tensor(v: VectorField) -> np.ndarray:
    """
    Full velocity gradient at the cell centers.

    Returns:
        np.ndarray: Shape (2, 2, nx, ny) with entry [a, b] = d_b v_a.
    """
    grid = v.grid
    dyu, dxv = node_derivatives(v)
    tensor = np.empty((2, 2, grid.nx, grid.ny))
    tensor[0, 0] = (np.roll(v.u, -1, axis=0) - v.u) / grid.x_spacing
    tensor[0, 1] = _nodes_to_cells(dyu)
    tensor[1, 0] = _nodes_to_cells(dxv)
    tensor[1, 1] = np.diff(v.v, axis=1) / grid.dy
    return tensor


def face_square_density(v: VectorField) -> np.ndarray:
    """Cell density whose quadrature equals the face-weighted sum of squares."""
    return 0.5 * (v.u**2 + np.roll(v.u, -1, axis=0) ** 2) + 0.5 * (v.v[:, :-1] ** 2 + v.v[:, 1:] ** 2)


def _weights(grid: Grid, region: LayerMask | None) -> np.ndarray:
    if region is None:
        return grid.cell_areas
    return grid.cell_areas * region.weights


def l2_norm(field: ScalarField | VectorField, region: LayerMask | None = None) -> float:
    """L2 norm by cell quadrature, restricted to the layer when a region is given."""
    if isinstance(field, VectorField):
        density = face_square_density(field)
    else:
        density = field.values**2
    return float(np.sqrt(np.sum(density * _weights(field.grid, region))))


def linf_norm(field: ScalarField | VectorField | NodeField) -> float:
    if isinstance(field, VectorField):
        return float(max(np.max(np.abs(field.u)), np.max(np.abs(field.v))))
    return float(np.max(np.abs(field.values)))


def inner(a: ScalarField | VectorField, b: ScalarField | VectorField) -> float:
    """Quadrature inner product; vectors pair face by face with the face control volumes."""
    grid = a.grid
    if isinstance(a, VectorField):
        return float(np.sum(a.u * b.u * grid.u_weights) + np.sum(a.v * b.v * grid.v_weights))
    return grid.integrate(a.values * b.values)


def _wall_cell_integral(f0, f1, y0: float, y1: float, reach: float) -> np.ndarray:
    """
    Integral over [0, min(reach, 2*y0)] of (f/d)^2 where f is the quadratic through
    (0, 0), (y0, f0) and (y1, f1); on that quadratic f/d is affine in d.
    """
    slope = (f1 / y1 - f0 / y0) / (y1 - y0)
    offset = f0 / y0 - slope * y0
    upper = min(reach, 2.0 * y0)
    if upper <= 0:
        return np.zeros_like(f0)
    d = 0.5 * upper * (_GAUSS_NODES + 1.0)
    ratio = offset[:, None] + slope[:, None] * d[None, :]
    return 0.5 * upper * (ratio**2 @ _GAUSS_WEIGHTS)


def weighted_l2_over_dist2(s: ScalarField, mask: LayerMask) -> float:
    """
    sqrt of the layer integral of s^2 / dist^2.

    Interior cells use the midpoint rule at the cell-center distance. The two
    wall-adjacent rows integrate the wall quadratic exactly in y over their overlap
    with the layer using 8-point Gauss-Legendre.

    Raises:
        BoundaryConditionError: If s does not declare zero wall values.
        ValueError: If the mask thickness is not positive.
    """
    if s.wall_values is None or tuple(map(float, s.wall_values)) != (0.0, 0.0):
        raise BoundaryConditionError("weighted norm needs a field vanishing on both walls")
    if not mask.thickness > 0:
        raise ValueError("mask thickness must be positive")

    grid = s.grid
    values = s.values
    yc = grid.y_centers
    length_y = grid.domain.length_y
    dx = grid.x_spacing

    density = values**2 / grid.center_distance**2
    total = np.sum(density[:, 1:-1] * grid.cell_areas[:, 1:-1] * mask.weights[:, 1:-1])

    bottom = _wall_cell_integral(values[:, 0], values[:, 1], yc[0], yc[1], mask.thickness)
    top = _wall_cell_integral(
        values[:, -1], values[:, -2], length_y - yc[-1], length_y - yc[-2], mask.thickness
    )
    total += dx * (np.sum(bottom) + np.sum(top))
    return float(np.sqrt(total))
