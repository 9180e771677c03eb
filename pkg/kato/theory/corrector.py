from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from kato.mesh.fields import (
    NodeField,
    VectorField,
    curl_of_scalar,
    gradient_tensor,
    gradient_tensor_norms,
    l2_norm,
    linf_norm,
)
from kato.mesh.geometry import Grid, LayerMask, layer_mask
from kato.theory.euler import EulerSolution
from kato.theory.rates import RateFit, fit_rate
from kato.util.exceptions import DegenerateFitError, ResolutionError
from kato.util.log import LOG

# cells of the wall row that must fit into nu
RESOLUTION_FACTOR = 4

EXPECTED_SLOPES = {
    "sup": 0.0,
    "grad_sup": -1.0,
    "l2": 0.5,
    "dt_l2": 0.5,
    "grad_l2": -0.5,
    "dist2_grad_sup": 1.0,
}


def _bump(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    inside = np.abs(s) < 1.0
    safe = np.where(inside, s, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe**2)), 0.0)


def _bump_slope(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    inside = np.abs(s) < 1.0
    safe = np.where(inside, s, 0.0)
    g1 = -2.0 * safe / (1.0 - safe**2) ** 2
    return np.where(inside, _bump(safe) * g1, 0.0)


def _bump_curvature(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    inside = np.abs(s) < 1.0
    safe = np.where(inside, s, 0.0)
    q = 1.0 - safe**2
    g1 = -2.0 * safe / q**2
    g2 = -2.0 / q**2 - 8.0 * safe**2 / q**3
    return np.where(inside, _bump(safe) * (g1**2 + g2), 0.0)


@dataclass(frozen=True)
class CutoffProfile:
    """
    Smooth cutoff on [0, inf) with eta(0) = 1 and eta = 0 from 1 on.

    Attributes:
        eta (Callable): The profile.
        d_eta (Callable): Its first derivative.
        dd_eta (Callable): Its second derivative.
    """

    eta: Callable[[np.ndarray], np.ndarray]
    d_eta: Callable[[np.ndarray], np.ndarray]
    dd_eta: Callable[[np.ndarray], np.ndarray]


def default_cutoff() -> CutoffProfile:
    """The bump eta(s) = exp(1 - 1/(1 - s^2)) for s < 1, zero beyond."""
    return CutoffProfile(eta=_bump, d_eta=_bump_slope, dd_eta=_bump_curvature)


@dataclass(frozen=True, eq=False)
class CorrectorField:
    """
    Divergence-free boundary-layer field carrying the Euler wall velocity.

    Attributes:
        nu (float): Layer thickness.
        field (VectorField): The corrector, declared with the Euler wall trace.
        support_mask (LayerMask): Layer of thickness nu.
    """

    nu: float
    field: VectorField
    support_mask: LayerMask


def build_corrector(
    sol: EulerSolution,
    grid: Grid,
    nu: float,
    t: float = 0.0,
    cutoff: CutoffProfile | None = None,
) -> CorrectorField:
    """
    Perpendicular gradient of eta(dist / nu) * psi sampled at the nodes.

    Raises:
        ResolutionError: If nu is not larger than four wall-row cell heights.
    """
    cutoff = cutoff or default_cutoff()
    if not nu > RESOLUTION_FACTOR * grid.wall_cell_height:
        raise ResolutionError(
            f"nu={nu:g} is not resolved: it must exceed {RESOLUTION_FACTOR} wall cells "
            f"({RESOLUTION_FACTOR * grid.wall_cell_height:.3g}); refine the grid or raise the stretch"
        )
    x, y = grid.nodes()
    distance = grid.domain.wall_distance(y)
    potential = cutoff.eta(distance / nu) * sol.stream(t, x, y)
    field = curl_of_scalar(NodeField(grid, potential), wall_u=sol.wall_velocity(t))
    return CorrectorField(nu=nu, field=field, support_mask=layer_mask(grid, nu))


def corrector_time_derivative(
    sol: EulerSolution, grid: Grid, nu: float, t: float, cutoff: CutoffProfile
) -> VectorField | None:
    if sol.steady:
        return None
    step = nu / 10.0
    later = build_corrector(sol, grid, nu, t + step, cutoff).field
    earlier = build_corrector(sol, grid, nu, max(t - step, 0.0), cutoff).field
    span = t + step - max(t - step, 0.0)
    return VectorField(
        grid,
        (later.u - earlier.u) / span,
        (later.v - earlier.v) / span,
        no_penetration=False,
    )


def corrector_norms(
    corrector: CorrectorField, sol: EulerSolution, t: float = 0.0, cutoff: CutoffProfile | None = None
) -> dict[str, float]:
    """sup, grad_sup, l2, dt_l2, grad_l2 and dist2_grad_sup of one corrector."""
    field = corrector.field
    grid = field.grid
    tensor = gradient_tensor(field)
    magnitude = np.sqrt(np.sum(tensor**2, axis=(0, 1)))
    distance = grid.center_distance[None, :]
    rate = corrector_time_derivative(sol, grid, corrector.nu, t, cutoff or default_cutoff())
    return {
        "sup": linf_norm(field),
        "grad_sup": float(np.max(magnitude)),
        "l2": l2_norm(field),
        "dt_l2": 0.0 if rate is None else l2_norm(rate),
        "grad_l2": float(np.sqrt(grid.integrate(gradient_tensor_norms(field).values))),
        "dist2_grad_sup": float(np.max(distance**2 * magnitude)),
    }


@dataclass(frozen=True)
class BoundCheck:
    """
    Fitted scaling of one corrector norm.

    Attributes:
        name (str): Norm identifier.
        expected (float): Exponent p of the bound norm <~ nu^p.
        fit (RateFit | None): Log-log fit, None when the norm vanishes for every nu.
        prefactor (float): max over nu of norm / nu^p.
        tolerance (float): Allowed distance of the fitted slope from p.
    """

    name: str
    expected: float
    fit: RateFit | None
    prefactor: float
    tolerance: float = 0.1

    @property
    def slope(self) -> float | None:
        return None if self.fit is None else self.fit.slope

    @property
    def within_bound(self) -> bool:
        """The norm decays at least as fast as nu^p."""
        return self.fit is None or self.fit.slope >= self.expected - self.tolerance

    @property
    def holds(self) -> bool:
        """The norm scales like nu^p, neither slower nor faster."""
        return self.fit is None or abs(self.fit.slope - self.expected) <= self.tolerance


@dataclass(frozen=True)
class CorrectorBoundsReport:
    nus: tuple[float, ...]
    norms: tuple[dict[str, float], ...]
    bounds: dict[str, BoundCheck]

    @property
    def holds(self) -> bool:
        return all(bound.holds for bound in self.bounds.values())


def verify_corrector_bounds(
    sol: EulerSolution,
    grids: Grid | Callable[[float], Grid],
    nus: Sequence[float],
    t: float = 0.0,
    cutoff: CutoffProfile | None = None,
    tolerance: float = 0.1,
) -> CorrectorBoundsReport:
    """
    Measure the corrector norms over a sequence of thicknesses and fit their exponents.

    Args:
        sol (EulerSolution): Entry whose stream function vanishes on both walls.
        grids (Grid | Callable[[float], Grid]): One grid, or a grid per nu.
        nus (Sequence[float]): At least four thicknesses.
        t (float): Evaluation time.
        cutoff (CutoffProfile | None): Defaults to the standard bump.
        tolerance (float): Allowed distance of a slope from its exponent.

    Raises:
        ValueError: If fewer than four thicknesses are given.
        ResolutionError: If a grid does not resolve its nu.
        DegenerateFitError: If every norm vanishes, or a norm vanishes for some nu only.
    """
    if len(nus) < 4:
        raise ValueError(f"corrector bounds need at least 4 values of nu, got {len(nus)}")
    cutoff = cutoff or default_cutoff()
    nus = tuple(float(nu) for nu in nus)

    rows = []
    for nu in nus:
        grid = grids(nu) if callable(grids) else grids
        corrector = build_corrector(sol, grid, nu, t, cutoff)
        rows.append(corrector_norms(corrector, sol, t, cutoff))
        LOG.debug("Corrector norms at nu=%g: %s", nu, rows[-1])

    if all(value == 0 for row in rows for value in row.values()):
        raise DegenerateFitError(f"every corrector norm of {sol.name!r} vanishes")

    bounds = {}
    for name, expected in EXPECTED_SLOPES.items():
        values = [row[name] for row in rows]
        prefactor = max(value / nu**expected for value, nu in zip(values, nus))
        if all(value == 0 for value in values):
            bounds[name] = BoundCheck(name, expected, None, prefactor, tolerance)
            continue
        fit = fit_rate(list(zip(nus, values)))
        bounds[name] = BoundCheck(name, expected, fit, prefactor, tolerance)
    return CorrectorBoundsReport(nus=nus, norms=tuple(rows), bounds=bounds)
