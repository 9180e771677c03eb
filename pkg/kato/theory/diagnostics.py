"""
Relative energy, Kato layer dissipation and the Gronwall accounting of a viscous run
against a smooth Euler solution.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from kato.flow.state import EnergyLedger, FlowState, momentum_pairing
from kato.mesh.fields import face_square_density, gradient_inner, gradient_tensor, gradient_tensor_norms
from kato.mesh.geometry import Grid
from kato.theory.corrector import CorrectorField, CutoffProfile, corrector_time_derivative, default_cutoff
from kato.theory.euler import EulerSolution, sample_density, sample_velocity
from kato.theory.rates import RateFit, fit_rate
from kato.util.exceptions import HorizonError

__all__ = [
    "GronwallBreakdown",
    "GronwallClosure",
    "GronwallTerms",
    "RateFit",
    "RelativeEnergySample",
    "e2_identity_gap",
    "energy_deficit",
    "fit_rate",
    "gronwall_constant",
    "gronwall_terms",
    "i1_bound",
    "integrate_terms",
    "kato_dissipation",
    "relative_energy",
]


@dataclass(frozen=True)
class RelativeEnergySample:
    """
    Relative energy of a viscous state with respect to an Euler solution.

    Attributes:
        time (float): Sample time.
        e1 (float): 1/2 int rho_nu |u_nu - u|^2.
        e2 (float): 1/2 int |rho_nu - rho|^2.
    """

    time: float
    e1: float
    e2: float

    @property
    def e_total(self) -> float:
        return self.e1 + self.e2


def relative_energy(state: FlowState, sol: EulerSolution) -> RelativeEnergySample:
    """Both parts by cell quadrature, with the Euler fields sampled exactly on the faces and centers."""
    grid = state.grid
    gap = state.vel - sample_velocity(sol, grid, state.time)
    e1 = 0.5 * grid.integrate(state.rho.values * face_square_density(gap))
    mismatch = state.rho.values - sample_density(sol, grid, state.time).values
    e2 = 0.5 * grid.integrate(mismatch**2)
    return RelativeEnergySample(time=state.time, e1=float(e1), e2=float(e2))


def e2_identity_gap(state: FlowState, sol: EulerSolution, initial_density: np.ndarray) -> float:
    """
    e2 - (int rho_0^2 - int rho_nu rho).

    Zero whenever both the transport and the Euler density keep the L2 norm of rho_0.
    """
    grid = state.grid
    rho_0 = np.asarray(initial_density, dtype=np.float64)
    rho = sample_density(sol, grid, state.time).values
    identity = grid.integrate(rho_0**2) - grid.integrate(state.rho.values * rho)
    return relative_energy(state, sol).e2 - identity


def kato_dissipation(ledger: EnergyLedger, horizon: float, nu: float | None = None) -> float:
    """
    nu int_0^T' int over the layer of |grad u_nu|^2, read from the ledger.

    Raises:
        HorizonError: If the horizon lies outside the recorded span.
        ValueError: If nu is given and differs from the ledger's layer thickness.
    """
    if nu is not None and not math.isclose(ledger.thickness, nu, rel_tol=1e-12):
        raise ValueError(f"ledger layer thickness {ledger.thickness:g} does not match nu={nu:g}")
    if not ledger.times or horizon < ledger.times[0]:
        raise HorizonError(f"horizon {horizon} lies before the ledger start")
    return ledger.at(horizon)[2]


def energy_deficit(ledger: EnergyLedger) -> float:
    """Initial kinetic energy minus final kinetic energy minus total dissipation."""
    if not ledger.times:
        raise HorizonError("ledger is empty")
    return ledger.kinetic[0] - ledger.kinetic[-1] - ledger.dissipation_total[-1]


@dataclass(frozen=True)
class GronwallTerms:
    """
    Instantaneous terms of the relative energy balance at one sample.

    Attributes:
        time (float): Sample time.
        i1 (float): -int rho_nu ((u_nu - u).grad) u . (u_nu - u).
        i2 (float): int (rho_nu - rho) (u.grad) u . (u - u_nu).
        i3 (float): int rho_nu (u_nu.grad) Phi . u_nu.
        i4 (float): int (rho_nu - rho) (u_nu - u) . d_t u.
        i5 (float): nu int grad u_nu : grad (u - Phi).
        hardy_bound (float): C_H rho_max ||dist^2 grad Phi||_inf int_layer |grad u_nu|^2.
        boundary_pairing (float): int rho_nu u_nu . Phi.
        corrector_rate (float): int rho_nu u_nu . d_t Phi.
    """

    time: float
    i1: float
    i2: float
    i3: float
    i4: float
    i5: float
    hardy_bound: float
    boundary_pairing: float
    corrector_rate: float


def gronwall_terms(
    state: FlowState,
    sol: EulerSolution,
    corr: CorrectorField,
    hardy_constant: float,
    cutoff: CutoffProfile | None = None,
) -> GronwallTerms:
    """
    Evaluate I1 to I5 and the corrector terms at the time of the state.

    Cell-centred quantities use face averages of the viscous velocity and the exact
    Euler fields at the cell centers.
    """
    grid = state.grid
    t = state.time
    x, y = grid.centers()
    rho_nu = state.rho.values
    rho = sol.rho(t, x, y)
    u_nu, v_nu = state.vel.cell_velocity()
    u, v = sol.vel(t, x, y)
    (ux, uy), (vx, vy) = sol.grad_u(t, x, y)
    dudt, dvdt = sol.du_dt(t, x, y)
    wu, wv = u_nu - u, v_nu - v

    i1 = -grid.integrate(rho_nu * (wu * (wu * ux + wv * uy) + wv * (wu * vx + wv * vy)))
    convect_u = u * ux + v * uy
    convect_v = u * vx + v * vy
    i2 = -grid.integrate((rho_nu - rho) * (convect_u * wu + convect_v * wv))
    i4 = grid.integrate((rho_nu - rho) * (wu * dudt + wv * dvdt))

    phi = corr.field
    tensor = gradient_tensor(phi)
    along_u = u_nu * tensor[0, 0] + v_nu * tensor[0, 1]
    along_v = u_nu * tensor[1, 0] + v_nu * tensor[1, 1]
    i3 = grid.integrate(rho_nu * (along_u * u_nu + along_v * v_nu))

    remainder = sample_velocity(sol, grid, t) - phi
    i5 = state.viscosity * grid.integrate(gradient_inner(state.vel, remainder).values)

    magnitude = np.sqrt(np.sum(tensor**2, axis=(0, 1)))
    dist2_grad = float(np.max(grid.center_distance[None, :] ** 2 * magnitude))
    layer_gradient = grid.integrate(gradient_tensor_norms(state.vel).values * corr.support_mask.weights)
    hardy_bound = hardy_constant * float(np.max(rho_nu)) * dist2_grad * layer_gradient

    rate = corrector_time_derivative(sol, grid, corr.nu, t, cutoff or default_cutoff())
    return GronwallTerms(
        time=t,
        i1=float(i1),
        i2=float(i2),
        i3=float(i3),
        i4=float(i4),
        i5=float(i5),
        hardy_bound=float(hardy_bound),
        boundary_pairing=momentum_pairing(state.rho, state.vel, phi),
        corrector_rate=0.0 if rate is None else momentum_pairing(state.rho, state.vel, rate),
    )


@dataclass(frozen=True)
class GronwallBreakdown:
    """Time integrals over the sampled span of I1 to I5 and of the Hardy bound."""

    time: float
    i1: float
    i2: float
    i3: float
    i4: float
    i5: float
    hardy_bound: float


def integrate_terms(samples: Sequence[GronwallTerms]) -> GronwallBreakdown:
    """Trapezoidal time integrals of the instantaneous terms."""
    if not samples:
        raise ValueError("no Gronwall samples to integrate")
    times = np.array([sample.time for sample in samples])

    def integral(name: str) -> float:
        if len(samples) < 2:
            return 0.0
        return float(trapezoid([getattr(sample, name) for sample in samples], times))

    return GronwallBreakdown(
        time=float(times[-1]),
        **{name: integral(name) for name in ("i1", "i2", "i3", "i4", "i5", "hardy_bound")},
    )


def _center_sup(values: np.ndarray) -> float:
    return float(np.max(np.abs(values)))


def gronwall_constant(sol: EulerSolution, grid: Grid, t: float, rho_min: float) -> float:
    """
    C = 2 ||grad u||_inf + (||(u.grad) u||_inf + ||d_t u||_inf + ||grad rho||_inf) max(1, 1/rho_min),
    the Young-inequality constant of the closure, measured at the cell centers.
    """
    if not rho_min > 0:
        raise ValueError(f"rho_min must be positive, got {rho_min}")
    x, y = grid.centers()
    u, v = sol.vel(t, x, y)
    (ux, uy), (vx, vy) = sol.grad_u(t, x, y)
    dudt, dvdt = sol.du_dt(t, x, y)
    rx, ry = sol.grad_rho(t, x, y)

    grad_u = _center_sup(np.sqrt(ux**2 + uy**2 + vx**2 + vy**2))
    convection = _center_sup(np.hypot(u * ux + v * uy, u * vx + v * vy))
    rate = _center_sup(np.hypot(dudt, dvdt))
    grad_rho = _center_sup(np.hypot(rx, ry))
    return 2.0 * grad_u + (convection + rate + grad_rho) * max(1.0, 1.0 / rho_min)


def i1_bound(state: FlowState, sol: EulerSolution) -> float:
    """2 ||grad u||_inf e1, an upper bound of |I1|."""
    x, y = state.grid.centers()
    (ux, uy), (vx, vy) = sol.grad_u(state.time, x, y)
    grad_u = _center_sup(np.sqrt(ux**2 + uy**2 + vx**2 + vy**2))
    return 2.0 * grad_u * relative_energy(state, sol).e1


@dataclass
class GronwallClosure:
    """
    Running check of E(s) <= E(0) + C int_0^s E + R(s).

    R(s) collects int (|I3| + |I5|), the boundary pairing |B(s) - B(0)| and
    int |int rho_nu u_nu . d_t Phi|. Samples must be added in time order.

    Attributes:
        constant (float): The Gronwall constant C.
        times (list[float]): Sample times.
        energies (list[float]): E at every sample.
        bounds (list[float]): Right-hand side at every sample.
    """

    constant: float
    times: list[float] = field(default_factory=list)
    energies: list[float] = field(default_factory=list)
    bounds: list[float] = field(default_factory=list)
    _remainder_rates: list[float] = field(default_factory=list, repr=False)
    _pairings: list[float] = field(default_factory=list, repr=False)

    def add(self, energy: RelativeEnergySample, terms: GronwallTerms) -> float:
        """
        Record one sample and return its violation, bound subtracted from E.

        Raises:
            ValueError: If the sample precedes the previous one or the two arguments disagree in time.
        """
        if not math.isclose(energy.time, terms.time, rel_tol=1e-12, abs_tol=1e-14):
            raise ValueError(f"energy at t={energy.time} paired with terms at t={terms.time}")
        if self.times and energy.time < self.times[-1]:
            raise ValueError(f"sample at t={energy.time} precedes t={self.times[-1]}")
        self.times.append(energy.time)
        self.energies.append(energy.e_total)
        self._remainder_rates.append(abs(terms.i3) + abs(terms.i5) + abs(terms.corrector_rate))
        self._pairings.append(terms.boundary_pairing)

        if len(self.times) == 1:
            self.bounds.append(energy.e_total)
            return 0.0
        times = np.asarray(self.times)
        remainder = trapezoid(self._remainder_rates, times) + abs(self._pairings[-1] - self._pairings[0])
        bound = self.energies[0] + self.constant * trapezoid(self.energies, times) + remainder
        self.bounds.append(float(bound))
        return energy.e_total - float(bound)

    @property
    def violations(self) -> np.ndarray:
        return np.asarray(self.energies) - np.asarray(self.bounds)

    @property
    def max_violation(self) -> float:
        if not self.times:
            return 0.0
        return float(np.max(self.violations))
