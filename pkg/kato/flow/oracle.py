"""Fine 1D reference for shear flows, rho0(y) d_t U = nu d_yy U with U = 0 on both walls."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import solve_banded

Profile = Callable[[np.ndarray], np.ndarray] | np.ndarray | float

# backward Euler half steps before Crank-Nicolson, to damp wall-data mismatch
STARTUP_HALF_STEPS = 2


def _sample(profile: Profile, y: np.ndarray, length_y: float) -> np.ndarray:
    if callable(profile):
        return np.broadcast_to(np.asarray(profile(y), dtype=np.float64), y.shape).copy()
    values = np.asarray(profile, dtype=np.float64)
    if values.ndim == 0:
        return np.full_like(y, float(values))
    return np.interp(y, np.linspace(0.0, length_y, values.size), values)


@dataclass(frozen=True)
class HeatSolution:
    """
    Sampled 1D shear history.

    Attributes:
        y (np.ndarray): Nodes from wall to wall.
        times (np.ndarray): Sample times, starting at 0.
        profiles (np.ndarray): U at every sample, shape (len(times), len(y)).
        rho (np.ndarray): Density at the nodes.
        dissipation_total (np.ndarray): nu int_0^t int |d_y U|^2, times length_x.
        dissipation_layer (np.ndarray): The same, restricted to the two wall strips.
        length_x (float): Streamwise period used for the area factors.
    """

    y: np.ndarray
    times: np.ndarray
    profiles: np.ndarray
    rho: np.ndarray
    dissipation_total: np.ndarray
    dissipation_layer: np.ndarray
    length_x: float

    @property
    def final(self) -> np.ndarray:
        return self.profiles[-1]

    def relative_energy(self, reference: Profile) -> np.ndarray:
        """1/2 int rho |U - U_ref|^2 at every sample, times length_x."""
        length_y = float(self.y[-1])
        target = _sample(reference, self.y, length_y)
        density = self.rho * (self.profiles - target) ** 2
        return 0.5 * self.length_x * trapezoid(density, self.y, axis=1)


def _strip_weights(y: np.ndarray, layer: float) -> np.ndarray:
    """Overlap of every node interval with [0, layer] and [L - layer, L], as a fraction."""
    lower, upper = y[:-1], y[1:]
    length_y = y[-1]
    if 2.0 * layer >= length_y:
        return np.ones(lower.size)
    bottom = np.clip(np.minimum(upper, layer) - lower, 0.0, None)
    top = np.clip(upper - np.maximum(lower, length_y - layer), 0.0, None)
    return np.clip((bottom + top) / (upper - lower), 0.0, 1.0)


def heat_oracle_1d(
    profile: Profile,
    rho_profile: Profile,
    nu: float,
    t: float,
    resolution: int = 4096,
    *,
    length_y: float = 1.0,
    length_x: float = 1.0,
    steps: int = 2000,
    samples: int = 10,
    layer: float | None = None,
) -> HeatSolution:
    """
    Integrate the shear heat equation with Crank-Nicolson on `resolution` uniform intervals.

    Args:
        profile (Profile): Initial U, a callable of y, samples on a uniform wall-to-wall
            grid, or a constant. Wall values are replaced by zero.
        rho_profile (Profile): Positive density, same forms.
        nu (float): Viscosity.
        t (float): Final time.
        resolution (int): Number of intervals.
        length_y (float): Wall separation.
        length_x (float): Period, multiplying every integral.
        steps (int): Time steps, rounded up to a multiple of samples.
        samples (int): Number of sampled intervals.
        layer (float | None): Strip width of the layer dissipation; defaults to nu.

    Returns:
        HeatSolution: The sampled history.

    Raises:
        ValueError: On non-positive sizes, viscosity or density.
    """
    if resolution < 2 or steps < 1 or samples < 1:
        raise ValueError("resolution, steps and samples must be positive")
    if not nu > 0 or t < 0:
        raise ValueError("nu must be positive and t non-negative")
    layer = nu if layer is None else layer

    y = np.linspace(0.0, length_y, resolution + 1)
    h = length_y / resolution
    values = _sample(profile, y, length_y)
    values[0] = values[-1] = 0.0
    rho = _sample(rho_profile, y, length_y)
    if np.min(rho) <= 0:
        raise ValueError("density must be positive")
    strips = _strip_weights(y, layer)

    steps = samples * math.ceil(steps / samples)
    dt = t / steps
    interior = rho[1:-1]

    def dissipation_rates(u: np.ndarray) -> tuple[float, float]:
        slope_sq = (np.diff(u) / h) ** 2
        return (
            nu * length_x * float(np.sum(slope_sq) * h),
            nu * length_x * float(np.sum(slope_sq * strips) * h),
        )

    def solve(u: np.ndarray, theta: float, tau: float) -> np.ndarray:
        # rho (u1 - u0) / tau = nu (theta L u1 + (1 - theta) L u0)
        coupling = nu * tau / h**2
        banded = np.zeros((3, resolution - 1))
        banded[0, 1:] = -theta * coupling
        banded[1, :] = interior + 2.0 * theta * coupling
        banded[2, :-1] = -theta * coupling
        laplace = u[:-2] - 2.0 * u[1:-1] + u[2:]
        rhs = interior * u[1:-1] + (1.0 - theta) * coupling * laplace
        new = np.zeros_like(u)
        new[1:-1] = solve_banded((1, 1), banded, rhs)
        return new

    profiles = [values.copy()]
    times = [0.0]
    total, layered = [0.0], [0.0]
    running_total = running_layer = 0.0
    rate_total, rate_layer = dissipation_rates(values)

    for n in range(1, steps + 1):
        if n == 1 and t > 0:
            for _ in range(STARTUP_HALF_STEPS):
                values = solve(values, 1.0, dt / STARTUP_HALF_STEPS)
        elif t > 0:
            values = solve(values, 0.5, dt)
        next_total, next_layer = dissipation_rates(values)
        running_total += 0.5 * dt * (rate_total + next_total)
        running_layer += 0.5 * dt * (rate_layer + next_layer)
        rate_total, rate_layer = next_total, next_layer
        if n % (steps // samples) == 0:
            profiles.append(values.copy())
            times.append(n * dt)
            total.append(running_total)
            layered.append(running_layer)

    return HeatSolution(
        y=y,
        times=np.asarray(times),
        profiles=np.asarray(profiles),
        rho=rho,
        dissipation_total=np.asarray(total),
        dissipation_layer=np.asarray(layered),
        length_x=length_x,
    )
