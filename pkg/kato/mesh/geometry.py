from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from kato.util.exceptions import DomainError


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Domain:
    """
    Channel that is periodic in x and bounded by no-slip walls at y=0 and y=length_y.

    Attributes:
        length_x (float): Streamwise period.
        length_y (float): Wall separation.
    """

    length_x: float = 1.0
    length_y: float = 1.0

    def __post_init__(self) -> None:
        if not self.length_x > 0:
            raise DomainError(f"length_x must be positive, got {self.length_x}")
        if not self.length_y > 0:
            raise DomainError(f"length_y must be positive, got {self.length_y}")

    @property
    def area(self) -> float:
        return self.length_x * self.length_y

    def wall_distance(self, y: np.ndarray) -> np.ndarray:
        """Vectorised distance to the nearer wall, without bounds checks."""
        return np.minimum(y, self.length_y - y)


def distance_to_boundary(domain: Domain, point: tuple[float, float]) -> float:
    """
    Distance of a point of the closed channel to the nearer wall.

    Raises:
        DomainError: If the point lies outside [0, length_x] x [0, length_y].
    """
    x, y = point
    if not (0.0 <= x <= domain.length_x and 0.0 <= y <= domain.length_y):
        raise DomainError(f"point ({x}, {y}) lies outside the channel")
    return float(min(y, domain.length_y - y))


@dataclass(frozen=True, eq=False)
class Grid:
    """
    Marker-and-cell grid on the channel.

    Cell (i, j) spans [i*dx, (i+1)*dx] x [y_faces[j], y_faces[j+1]]. The x-velocity
    lives on the nx vertical faces x = i*dx (periodic), the y-velocity on the ny+1
    horizontal faces y = y_faces[j], scalars at cell centers and stream functions
    at the nodes (x = i*dx, y = y_faces[j]). Arrays are indexed [i, j].

    Attributes:
        domain (Domain): The channel.
        nx (int): Cell count in x.
        ny (int): Cell count in y.
        stretch (float): Wall clustering parameter; 0 gives uniform spacing.
        y_faces (np.ndarray): ny+1 wall-normal face positions.
        x_spacing (float): Uniform streamwise spacing.
        cell_areas (np.ndarray): Quadrature weight of each cell, shape (nx, ny).
    """

    domain: Domain
    nx: int
    ny: int
    stretch: float
    y_faces: np.ndarray
    x_spacing: float
    cell_areas: np.ndarray

    @cached_property
    def dy(self) -> np.ndarray:
        return _frozen(np.diff(self.y_faces))

    @cached_property
    def y_centers(self) -> np.ndarray:
        return _frozen(0.5 * (self.y_faces[:-1] + self.y_faces[1:]))

    @cached_property
    def dy_faces(self) -> np.ndarray:
        """Control-volume height of each horizontal face; half cells at the walls."""
        heights = np.empty(self.ny + 1)
        heights[0] = 0.5 * self.dy[0]
        heights[-1] = 0.5 * self.dy[-1]
        heights[1:-1] = np.diff(self.y_centers)
        return _frozen(heights)

    @cached_property
    def x_faces(self) -> np.ndarray:
        return _frozen(self.x_spacing * np.arange(self.nx))

    @cached_property
    def x_centers(self) -> np.ndarray:
        return _frozen(self.x_faces + 0.5 * self.x_spacing)

    @cached_property
    def u_weights(self) -> np.ndarray:
        return _frozen(np.broadcast_to(self.x_spacing * self.dy, (self.nx, self.ny)))

    @cached_property
    def v_weights(self) -> np.ndarray:
        return _frozen(
            np.broadcast_to(self.x_spacing * self.dy_faces, (self.nx, self.ny + 1))
        )

    @cached_property
    def center_distance(self) -> np.ndarray:
        return _frozen(self.domain.wall_distance(self.y_centers))

    @property
    def min_dy(self) -> float:
        return float(self.dy.min())

    @property
    def wall_cell_height(self) -> float:
        return float(max(self.dy[0], self.dy[-1]))

    @property
    def descriptor(self) -> str:
        return f"{self.nx}x{self.ny}@{self.stretch:g}"

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_centers, self.y_centers, indexing="ij")

    def u_points(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_faces, self.y_centers, indexing="ij")

    def v_points(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_centers, self.y_faces, indexing="ij")

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_faces, self.y_faces, indexing="ij")

    def integrate(self, density: np.ndarray) -> float:
        """Midpoint quadrature of a cell-centered density."""
        return float(np.sum(density * self.cell_areas))

    def dictify(self) -> dict:
        return {
            "nx": self.nx,
            "ny": self.ny,
            "stretch": self.stretch,
            "length_x": self.domain.length_x,
            "length_y": self.domain.length_y,
        }

    @classmethod
    def from_dict(cls, data: dict) -> Grid:
        domain = Domain(length_x=data["length_x"], length_y=data["length_y"])
        return build_grid(domain, nx=data["nx"], ny=data["ny"], stretch=data["stretch"])


def build_grid(domain: Domain, nx: int, ny: int, stretch: float = 0.0) -> Grid:
    """
    Build a MAC grid with optional symmetric tanh clustering towards both walls.

    The face positions are y(s) = L/2 * (1 + tanh(stretch*(2s-1)) / tanh(stretch))
    for uniformly spaced s in [0, 1].

    Raises:
        ValueError: If nx < 4, ny < 4 or stretch < 0.
    """
    if nx < 4 or ny < 4:
        raise ValueError(f"Grid needs at least 4x4 cells, got {nx}x{ny}")
    if stretch < 0:
        raise ValueError(f"Stretch must be non-negative, got {stretch}")

    length_y = domain.length_y
    s = np.linspace(0.0, 1.0, ny + 1)
    if stretch == 0:
        y_faces = length_y * s
    else:
        y_faces = 0.5 * length_y * (1.0 + np.tanh(stretch * (2.0 * s - 1.0)) / np.tanh(stretch))
    y_faces[0] = 0.0
    y_faces[-1] = length_y

    x_spacing = domain.length_x / nx
    cell_areas = np.broadcast_to(x_spacing * np.diff(y_faces), (nx, ny))
    return Grid(
        domain=domain,
        nx=int(nx),
        ny=int(ny),
        stretch=float(stretch),
        y_faces=_frozen(y_faces),
        x_spacing=float(x_spacing),
        cell_areas=_frozen(cell_areas),
    )


@dataclass(frozen=True, eq=False)
class LayerMask:
    """
    Boundary layer of a given thickness, as fractional cell weights.

    Attributes:
        grid (Grid): Grid the weights belong to.
        thickness (float): Layer thickness (the nu in Omega_nu).
        weights (np.ndarray): Fraction of each cell's area inside the layer, in [0, 1].
    """

    grid: Grid
    thickness: float
    weights: np.ndarray

    @property
    def area(self) -> float:
        return self.grid.integrate(self.weights)

    def strip_cells(self) -> float:
        """Fractional number of cells across one strip of the layer."""
        lower = self.grid.y_centers < 0.5 * self.grid.domain.length_y
        return float(np.sum(self.weights[0, lower]))


def layer_mask(grid: Grid, thickness: float) -> LayerMask:
    """
    Exact overlap of every cell's y-extent with [0, nu] and [L - nu, L].

    Raises:
        ValueError: If the thickness is not positive.
    """
    if not thickness > 0:
        raise ValueError(f"Layer thickness must be positive, got {thickness}")

    lower, upper = grid.y_faces[:-1], grid.y_faces[1:]
    length_y = grid.domain.length_y
    if 2.0 * thickness >= length_y:
        fraction = np.ones(grid.ny)
    else:
        bottom = np.clip(np.minimum(upper, thickness) - lower, 0.0, None)
        top = np.clip(upper - np.maximum(lower, length_y - thickness), 0.0, None)
        fraction = np.clip((bottom + top) / grid.dy, 0.0, 1.0)

    weights = np.broadcast_to(fraction, (grid.nx, grid.ny))
    return LayerMask(grid=grid, thickness=float(thickness), weights=_frozen(weights))
