from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from kato.flow.pressure import face_densities, project_initial_velocity
from kato.mesh.fields import ScalarField, VectorField, face_square_density
from kato.mesh.geometry import LayerMask
from kato.util.exceptions import HorizonError


def momentum_pairing(rho: ScalarField, a: VectorField, b: VectorField) -> float:
    """Density-weighted face inner product of two vector fields."""
    grid = rho.grid
    rho_x, rho_y = face_densities(rho)
    return float(
        np.sum(rho_x * a.u * b.u * grid.u_weights) + np.sum(rho_y * a.v * b.v * grid.v_weights)
    )


@dataclass(frozen=True, eq=False)
class FlowState:
    """
    One snapshot of a viscous run.

    Attributes:
        rho (ScalarField): Density at the cell centers.
        vel (VectorField): Velocity on the faces, no-slip on both walls.
        pressure (ScalarField): Pressure at the cell centers, zero mean.
        time (float): Simulation time.
        viscosity (float): The nu of the run.
    """

    rho: ScalarField
    vel: VectorField
    pressure: ScalarField
    time: float
    viscosity: float

    def __post_init__(self) -> None:
        if not self.viscosity > 0:
            raise ValueError(f"Viscosity must be positive, got {self.viscosity}")
        if self.vel.wall_u != (0.0, 0.0) or not self.vel.no_penetration:
            raise ValueError("FlowState velocity must satisfy no-slip on both walls")
        if np.min(self.rho.values) <= 0:
            raise ValueError("Density must be positive")

    @property
    def grid(self):
        return self.rho.grid

    @property
    def kinetic_energy(self) -> float:
        return 0.5 * self.grid.integrate(self.rho.values * face_square_density(self.vel))

    @property
    def mass(self) -> float:
        return self.grid.integrate(self.rho.values)

    @classmethod
    def initial(
        cls,
        rho: ScalarField,
        vel: VectorField,
        viscosity: float,
        time: float = 0.0,
        tol: float = 1e-10,
    ) -> FlowState:
        """Initial state with the velocity made no-slip and divergence-free."""
        projected, _ = project_initial_velocity(rho, vel, tol)
        return cls(rho, projected, ScalarField.zeros(rho.grid), time, viscosity)


@dataclass
class EnergyLedger:
    """
    Running energy balance of one trajectory.

    Attributes:
        mask (LayerMask): Layer over which the dissipation is additionally restricted.
        times (list[float]): Times at which the ledger was updated.
        kinetic (list[float]): 1/2 int rho |u|^2 at those times.
        dissipation_total (list[float]): nu int_0^t int |grad u|^2.
        dissipation_layer (list[float]): The same integral restricted to the layer.
    """

    mask: LayerMask
    times: list[float] = field(default_factory=list)
    kinetic: list[float] = field(default_factory=list)
    dissipation_total: list[float] = field(default_factory=list)
    dissipation_layer: list[float] = field(default_factory=list)

    @property
    def thickness(self) -> float:
        return self.mask.thickness

    def start(self, state: FlowState) -> None:
        self.times[:] = [state.time]
        self.kinetic[:] = [state.kinetic_energy]
        self.dissipation_total[:] = [0.0]
        self.dissipation_layer[:] = [0.0]

    def record(self, time: float, kinetic: float, total: float, layer: float) -> None:
        """
        Append one step.

        Args:
            time (float): End time of the step.
            kinetic (float): Kinetic energy at that time.
            total (float): Dissipation of the step over the whole channel.
            layer (float): Dissipation of the step inside the layer.
        """
        if not self.times:
            raise ValueError("ledger has not been started")
        if time < self.times[-1]:
            raise ValueError(f"time {time} precedes the last ledger entry {self.times[-1]}")
        self.times.append(float(time))
        self.kinetic.append(float(kinetic))
        self.dissipation_total.append(self.dissipation_total[-1] + float(total))
        self.dissipation_layer.append(self.dissipation_layer[-1] + float(layer))

    def at(self, time: float) -> tuple[float, float, float]:
        """Interpolated (kinetic, total, layer) at a time inside the recorded span."""
        if not self.times or time > self.times[-1] * (1 + 1e-12) + 1e-14:
            raise HorizonError(f"time {time} lies beyond the ledger")
        return (
            float(np.interp(time, self.times, self.kinetic)),
            float(np.interp(time, self.times, self.dissipation_total)),
            float(np.interp(time, self.times, self.dissipation_layer)),
        )

    def inequality_excess(self) -> np.ndarray:
        """kinetic(t) + dissipation_total(t) - kinetic(0) per entry."""
        return np.asarray(self.kinetic) + np.asarray(self.dissipation_total) - self.kinetic[0]
