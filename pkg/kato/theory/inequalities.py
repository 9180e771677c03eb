"""Layer Hardy and Poincare ratios over families of fields vanishing on both walls."""

from __future__ import annotations

import math
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass

import numpy as np

from kato.mesh.fields import ScalarField, gradient, l2_norm, weighted_l2_over_dist2
from kato.mesh.geometry import Grid, layer_mask
from kato.theory.rates import RateFit, fit_rate
from kato.util.exceptions import DegenerateFitError, ResolutionError
from kato.util.log import LOG

# wall-row cell heights a layer must exceed
RESOLUTION_FACTOR = 4

Generator = Callable[[Grid, object], np.ndarray]


@dataclass(frozen=True)
class TestFunctionFamily:
    """
    Parameterized fields with zero trace on both walls.

    Attributes:
        name (str): Family identifier.
        members (tuple): One parameter per member.
        generator (Generator): Maps (grid, parameter) to cell-centered values.
    """

    __test__ = False

    name: str
    members: tuple
    generator: Generator

    @property
    def parameter_count(self) -> int:
        return len(self.members)

    def member_label(self, member: object) -> str:
        return f"{self.name}:{member}"

    def field(self, grid: Grid, member: object) -> ScalarField:
        return ScalarField(grid, self.generator(grid, member), wall_values=(0.0, 0.0))

    def fields(self, grid: Grid) -> Iterator[tuple[object, ScalarField]]:
        for member in self.members:
            yield member, self.field(grid, member)


def _distance_power(grid: Grid, alpha: float) -> np.ndarray:
    _, y = grid.centers()
    return grid.domain.wall_distance(y) ** alpha


def distance_power_family(alphas: Sequence[float] = (1.0, 1.5, 2.0)) -> TestFunctionFamily:
    """f = dist^alpha; alpha below 1/2 makes f / dist non square integrable."""
    if any(alpha < 0.5 for alpha in alphas):
        raise ValueError("distance powers must be at least 1/2")
    return TestFunctionFamily("distance_power", tuple(float(alpha) for alpha in alphas), _distance_power)


def _modulated_sine(grid: Grid, mode: int) -> np.ndarray:
    x, y = grid.centers()
    domain = grid.domain
    return np.sin(mode * math.pi * y / domain.length_y) * (
        1.0 + 0.5 * np.cos(2.0 * math.pi * x / domain.length_x)
    )


def sine_family(modes: Sequence[int] = (1, 2, 3)) -> TestFunctionFamily:
    """f = sin(k pi y / L_y) (1 + cos(2 pi x / L_x) / 2)."""
    if any(int(mode) != mode or mode < 1 for mode in modes):
        raise ValueError("sine modes must be positive integers")
    return TestFunctionFamily("sine", tuple(int(mode) for mode in modes), _modulated_sine)


class _RandomBump:
    """Picklable generator of seeded smooth fields, sum_k a_k sin(k pi y / L_y) (1 + b cos(...))."""

    MODES = 4

    def __init__(self, seed: int) -> None:
        self.seed = seed

    def __call__(self, grid: Grid, index: int) -> np.ndarray:
        rng = np.random.default_rng([self.seed, index])
        amplitudes = rng.normal(size=self.MODES)
        streamwise = int(rng.integers(1, 4))
        modulation = rng.uniform(0.0, 0.9)
        phase = rng.uniform(0.0, 2.0 * math.pi)

        x, y = grid.centers()
        domain = grid.domain
        profile = sum(
            a * np.sin((k + 1) * math.pi * y / domain.length_y) for k, a in enumerate(amplitudes)
        )
        wave = 1.0 + modulation * np.cos(2.0 * math.pi * streamwise * x / domain.length_x + phase)
        return profile * wave


def random_bump_family(seed: int = 0, count: int = 4) -> TestFunctionFamily:
    """Reproducible random smooth fields; the same seed gives the same members."""
    if count < 1:
        raise ValueError("random family needs at least one member")
    return TestFunctionFamily("random_bump", tuple(range(count)), _RandomBump(seed))


def default_families(seed: int = 0) -> tuple[TestFunctionFamily, ...]:
    return distance_power_family(), sine_family(), random_bump_family(seed)


def _layer_norms(f: ScalarField, grid: Grid, eps: float):
    if f.grid is not grid:
        raise ValueError("field does not live on the given grid")
    if not eps > RESOLUTION_FACTOR * grid.wall_cell_height:
        raise ResolutionError(
            f"layer eps={eps:g} is not resolved: it must exceed {RESOLUTION_FACTOR} wall cells "
            f"({RESOLUTION_FACTOR * grid.wall_cell_height:.3g})"
        )
    mask = layer_mask(grid, eps)
    return mask, l2_norm(gradient(f), mask)


def hardy_ratio(f: ScalarField, grid: Grid, eps: float) -> float:
    """
    int_layer f^2 / dist^2 divided by int_layer |grad f|^2.

    Raises:
        ResolutionError: If eps does not exceed four wall-row cell heights.
        BoundaryConditionError: If f does not declare zero wall values.
        DegenerateFitError: If the gradient vanishes in the layer.
    """
    mask, grad_norm = _layer_norms(f, grid, eps)
    if grad_norm == 0:
        raise DegenerateFitError(f"gradient vanishes in the layer of thickness {eps:g}")
    return (weighted_l2_over_dist2(f, mask) / grad_norm) ** 2


def poincare_ratio(f: ScalarField, grid: Grid, eps: float) -> float:
    """
    ||f||_layer / (eps ||grad f||_layer).

    Raises:
        ResolutionError: If eps does not exceed four wall-row cell heights.
        DegenerateFitError: If the gradient vanishes in the layer.
    """
    mask, grad_norm = _layer_norms(f, grid, eps)
    if grad_norm == 0:
        raise DegenerateFitError(f"gradient vanishes in the layer of thickness {eps:g}")
    return l2_norm(f, mask) / (eps * grad_norm)


@dataclass(frozen=True)
class StabilityRow:
    family: str
    member: str
    eps: float
    hardy_ratio: float
    poincare_ratio: float

    def dictify(self) -> dict:
        return {
            "family": self.family,
            "member": self.member,
            "eps": self.eps,
            "hardy_ratio": self.hardy_ratio,
            "poincare_ratio": self.poincare_ratio,
        }


@dataclass(frozen=True)
class StabilityReport:
    """
    Ratios of every member at every eps, their suprema and the fitted eps dependence.

    Attributes:
        rows (tuple[StabilityRow, ...]): One row per (member, eps), eps ascending.
        hardy_sup (float): Largest Hardy ratio.
        poincare_sup (float): Largest Poincare ratio.
        hardy_fit (RateFit): Fit of the per-eps maximum Hardy ratio against eps.
        poincare_fit (RateFit): The same for the Poincare ratio.
    """

    rows: tuple[StabilityRow, ...]
    hardy_sup: float
    poincare_sup: float
    hardy_fit: RateFit
    poincare_fit: RateFit

    def summary(self) -> dict:
        return {
            "hardy_sup": self.hardy_sup,
            "hardy_slope": self.hardy_fit.slope,
            "poincare_sup": self.poincare_sup,
            "poincare_slope": self.poincare_fit.slope,
        }


def constant_stability(
    family: TestFunctionFamily | Sequence[TestFunctionFamily],
    grids: Grid | Callable[[float], Grid],
    eps_list: Sequence[float],
) -> StabilityReport:
    """
    Evaluate both ratios over all members and thicknesses.

    Args:
        family (TestFunctionFamily | Sequence[TestFunctionFamily]): One family or several.
        grids (Grid | Callable[[float], Grid]): One grid, or a grid per eps.
        eps_list (Sequence[float]): At least four thicknesses spanning a decade.

    Raises:
        ValueError: If fewer than four thicknesses are given or they span less than a decade.
        ResolutionError: If a grid does not resolve its eps.
    """
    families = (family,) if isinstance(family, TestFunctionFamily) else tuple(family)
    eps_values = sorted(float(eps) for eps in eps_list)
    if len(eps_values) < 4:
        raise ValueError(f"constant stability needs at least 4 thicknesses, got {len(eps_values)}")
    if eps_values[-1] < 10.0 * eps_values[0] * (1.0 - 1e-12):
        raise ValueError("thicknesses must span at least one decade")

    rows = []
    hardy_max, poincare_max = [], []
    for eps in eps_values:
        grid = grids(eps) if callable(grids) else grids
        hardy_here, poincare_here = 0.0, 0.0
        for fam in families:
            for member, f in fam.fields(grid):
                row = StabilityRow(
                    family=fam.name,
                    member=fam.member_label(member),
                    eps=eps,
                    hardy_ratio=hardy_ratio(f, grid, eps),
                    poincare_ratio=poincare_ratio(f, grid, eps),
                )
                rows.append(row)
                hardy_here = max(hardy_here, row.hardy_ratio)
                poincare_here = max(poincare_here, row.poincare_ratio)
        hardy_max.append(hardy_here)
        poincare_max.append(poincare_here)
        LOG.debug("eps=%g: max Hardy ratio %.6g, max Poincare ratio %.6g", eps, hardy_here, poincare_here)

    return StabilityReport(
        rows=tuple(rows),
        hardy_sup=max(hardy_max),
        poincare_sup=max(poincare_max),
        hardy_fit=fit_rate(zip(eps_values, hardy_max)),
        poincare_fit=fit_rate(zip(eps_values, poincare_max)),
    )


def measured_hardy_constant(grid: Grid, eps: float, seed: int = 0) -> float:
    """Largest Hardy ratio over the default families at one thickness."""
    return max(
        hardy_ratio(f, grid, eps) for family in default_families(seed) for _, f in family.fields(grid)
    )
