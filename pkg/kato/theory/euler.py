"""Closed-form solutions of the inhomogeneous incompressible Euler equations in the channel."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from kato.mesh.fields import NodeField, ScalarField, VectorField
from kato.mesh.geometry import Domain, Grid
from kato.util.exceptions import CatalogError

Scalar = Callable[[float, np.ndarray, np.ndarray], np.ndarray]
Pair = Callable[[float, np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
Tensor = Callable[
    [float, np.ndarray, np.ndarray],
    tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]],
]


@dataclass(frozen=True)
class EulerSolution:
    """
    Smooth Euler fields, evaluable at any (t, x, y).

    Attributes:
        name (str): Catalog identifier.
        rho (Scalar): Density.
        vel (Pair): Velocity (u, v).
        pressure (Scalar): Pressure.
        stream (Scalar): Stream function psi with u = d_y psi, v = -d_x psi.
        du_dt (Pair): Time derivative of the velocity.
        drho_dt (Scalar): Time derivative of the density.
        grad_u (Tensor): ((d_x u, d_y u), (d_x v, d_y v)).
        grad_rho (Pair): Density gradient.
        grad_pressure (Pair): Pressure gradient.
        domain (Domain): Channel the solution lives on.
        steady (bool): Whether every field is time independent.
        params (dict): Parameters the entry was built from.
    """

    name: str
    rho: Scalar
    vel: Pair
    pressure: Scalar
    stream: Scalar
    du_dt: Pair
    drho_dt: Scalar
    grad_u: Tensor
    grad_rho: Pair
    grad_pressure: Pair
    domain: Domain
    steady: bool = True
    params: dict = field(default_factory=dict)

    @property
    def homogeneous(self) -> bool:
        """Whether the density is the same constant everywhere."""
        return self.params.get("rho_contrast", 0.0) == 0

    def wall_velocity(self, t: float) -> tuple[float, float]:
        """Tangential velocity on (y=0, y=L_y)."""
        x = np.zeros(1)
        bottom = self.vel(t, x, np.zeros(1))[0]
        top = self.vel(t, x, np.full(1, self.domain.length_y))[0]
        return float(bottom[0]), float(top[0])


@dataclass(frozen=True)
class EulerResiduals:
    momentum: float
    transport: float
    divergence: float


def _zeros(_t: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.zeros(np.broadcast(x, y).shape)


def _zero_pair(t: float, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return _zeros(t, x, y), _zeros(t, x, y)


def _shear_velocity(profile, t, x, y):
    return profile(y) + _zeros(t, x, y), _zeros(t, x, y)


def _shear_gradient(slope, t, x, y):
    zero = _zeros(t, x, y)
    return (zero, slope(y) + zero), (zero, zero)


def _layered_density(contrast, length_y, t, x, y):
    return 1.0 + contrast * np.cos(math.pi * y / length_y) + _zeros(t, x, y)


def _layered_density_gradient(contrast, length_y, t, x, y):
    slope = -contrast * math.pi / length_y * np.sin(math.pi * y / length_y)
    return _zeros(t, x, y), slope + _zeros(t, x, y)


def _stream(potential, t, x, y):
    return potential(y) + _zeros(t, x, y)


class _Trig:
    """Picklable A * f(k pi y / L) with f one of sin, cos."""

    def __init__(self, amplitude: float, wavenumber: float, kind: str) -> None:
        self.amplitude = amplitude
        self.wavenumber = wavenumber
        self.kind = kind

    def __call__(self, y: np.ndarray) -> np.ndarray:
        phase = self.wavenumber * np.asarray(y)
        if self.kind == "sin":
            return self.amplitude * np.sin(phase)
        if self.kind == "cos":
            return self.amplitude * np.cos(phase)
        if self.kind == "one_minus_cos":
            return self.amplitude * (1.0 - np.cos(phase))
        raise ValueError(self.kind)


SHEAR_PROFILES = ("sine", "cosine")


def steady_shear(
    amplitude: float = 1.0,
    mode: int = 2,
    rho_contrast: float = 0.0,
    profile: str = "sine",
    domain: Domain | None = None,
) -> EulerSolution:
    """
    Steady parallel shear u = (U(y), 0) over the layered density rho = 1 + r cos(pi y / L_y).

    Every term of the Euler system vanishes with p = 0. With profile "sine",
    U = A sin(k pi y / L_y) vanishes on both walls and k must be even so that the
    stream function vanishes on both walls. With profile "cosine",
    U = A cos(k pi y / L_y) has zero net flux for every k but slips along the walls.

    Raises:
        CatalogError: If k < 1, r is outside [0, 1], the profile is unknown or the net
            flux through the channel is not zero.
    """
    domain = domain or Domain()
    length_y = domain.length_y
    if int(mode) != mode or mode < 1:
        raise CatalogError(f"mode must be a positive integer, got {mode}")
    if not 0.0 <= rho_contrast <= 1.0:
        raise CatalogError(f"rho_contrast must lie in [0, 1], got {rho_contrast}")
    if profile not in SHEAR_PROFILES:
        raise CatalogError(f"unknown shear profile {profile!r}, expected one of {SHEAR_PROFILES}")
    if profile == "sine" and amplitude != 0 and mode % 2 == 1:
        raise CatalogError(
            f"sine shear with odd mode {mode} carries net flux; the stream function would not "
            "vanish on both walls"
        )

    k = math.pi * mode / length_y
    if profile == "sine":
        velocity = _Trig(amplitude, k, "sin")
        slope = _Trig(amplitude * k, k, "cos")
        potential = _Trig(amplitude / k, k, "one_minus_cos")
    else:
        velocity = _Trig(amplitude, k, "cos")
        slope = _Trig(-amplitude * k, k, "sin")
        potential = _Trig(amplitude / k, k, "sin")

    name = "rest" if amplitude == 0 else "steady_shear"
    return EulerSolution(
        name=name,
        rho=partial(_layered_density, rho_contrast, length_y),
        vel=partial(_shear_velocity, velocity),
        pressure=_zeros,
        stream=partial(_stream, potential),
        du_dt=_zero_pair,
        drho_dt=_zeros,
        grad_u=partial(_shear_gradient, slope),
        grad_rho=partial(_layered_density_gradient, rho_contrast, length_y),
        grad_pressure=_zero_pair,
        domain=domain,
        steady=True,
        params={
            "amplitude": amplitude,
            "mode": mode,
            "rho_contrast": rho_contrast,
            "profile": profile,
        },
    )


def rest(domain: Domain | None = None, rho_contrast: float = 0.0) -> EulerSolution:
    return steady_shear(0.0, 2, rho_contrast, "sine", domain)


def _build_shear(params: dict, domain: Domain) -> EulerSolution:
    return steady_shear(domain=domain, **params)


def _build_rest(params: dict, domain: Domain) -> EulerSolution:
    return rest(domain, **params)


CATALOG: dict[str, Callable[[dict, Domain], EulerSolution]] = {
    "steady_shear": _build_shear,
    "rest": _build_rest,
}


def catalog_entry(name: str, params: dict | None = None, domain: Domain | None = None) -> EulerSolution:
    """
    Build a catalog entry by name.

    Raises:
        CatalogError: If the name is unknown or the parameters are rejected.
    """
    try:
        factory = CATALOG[name]
    except KeyError:
        raise CatalogError(
            f"unknown Euler catalog entry {name!r}, expected one of {sorted(CATALOG)}"
        ) from None
    try:
        return factory(dict(params or {}), domain or Domain())
    except TypeError as err:
        raise CatalogError(f"invalid parameters for {name!r}: {err}") from err


def sample_velocity(sol: EulerSolution, grid: Grid, t: float, wall_u=None) -> VectorField:
    """
    Velocity on the faces; the wall rows of v are the exact slip values (zero).

    The declared wall velocity defaults to the analytic tangential trace.
    """
    xu, yu = grid.u_points()
    xv, yv = grid.v_points()
    u, _ = sol.vel(t, xu, yu)
    _, v = sol.vel(t, xv, yv)
    v = np.array(v, dtype=np.float64)
    v[:, 0] = 0.0
    v[:, -1] = 0.0
    walls = sol.wall_velocity(t) if wall_u is None else wall_u
    return VectorField(grid, u, v, walls)


def sample_density(sol: EulerSolution, grid: Grid, t: float) -> ScalarField:
    x, y = grid.centers()
    return ScalarField(grid, sol.rho(t, x, y))


def sample_pressure(sol: EulerSolution, grid: Grid, t: float) -> ScalarField:
    x, y = grid.centers()
    return ScalarField(grid, sol.pressure(t, x, y))


def sample_stream(sol: EulerSolution, grid: Grid, t: float) -> NodeField:
    x, y = grid.nodes()
    return NodeField(grid, sol.stream(t, x, y))


def residual_norms(sol: EulerSolution, grid: Grid, t: float) -> EulerResiduals:
    """
    L2 norms over the grid of the pointwise residuals of
        rho (d_t u + (u . grad) u) + grad p = 0,
        d_t rho + u . grad rho = 0,
        div u = 0,
    sampled at the cell centers.
    """
    x, y = grid.centers()
    rho = sol.rho(t, x, y)
    u, v = sol.vel(t, x, y)
    (ux, uy), (vx, vy) = sol.grad_u(t, x, y)
    dudt, dvdt = sol.du_dt(t, x, y)
    px, py = sol.grad_pressure(t, x, y)
    rx, ry = sol.grad_rho(t, x, y)

    momentum_x = rho * (dudt + u * ux + v * uy) + px
    momentum_y = rho * (dvdt + u * vx + v * vy) + py
    transport = sol.drho_dt(t, x, y) + u * rx + v * ry
    div = ux + vy

    def norm(density: np.ndarray) -> float:
        return float(np.sqrt(grid.integrate(density)))

    return EulerResiduals(
        momentum=norm(momentum_x**2 + momentum_y**2),
        transport=norm(transport**2),
        divergence=norm(div**2),
    )


def kinetic_energy(sol: EulerSolution, grid: Grid, t: float) -> float:
    """1/2 int rho |u|^2 by cell quadrature."""
    x, y = grid.centers()
    u, v = sol.vel(t, x, y)
    return 0.5 * grid.integrate(sol.rho(t, x, y) * (u**2 + v**2))
