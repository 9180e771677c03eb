from dataclasses import dataclass
from pathlib import Path
from shutil import rmtree
from uuid import uuid4

import numpy as np
from hypothesis import strategies as st

from kato.flow.state import FlowState
from kato.lab.records import SweepRecord
from kato.mesh.fields import ScalarField, VectorField
from kato.mesh.geometry import Domain, Grid, build_grid
from kato.theory.euler import EulerSolution, sample_density, sample_velocity


@dataclass
class TmpDirectory:
    prefix: str

    def __enter__(self) -> Path:
        path = Path(f"{self.prefix}/{uuid4()}")
        self.path = path
        path.mkdir(parents=True)
        return path

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        rmtree(self.path)


@st.composite
def channel_grids(draw: st.DrawFn, max_cells: int = 24) -> Grid:
    domain = Domain(
        length_x=draw(st.floats(min_value=0.5, max_value=3.0)),
        length_y=draw(st.floats(min_value=0.5, max_value=3.0)),
    )
    return build_grid(
        domain,
        nx=draw(st.integers(min_value=4, max_value=max_cells)),
        ny=draw(st.integers(min_value=4, max_value=max_cells)),
        stretch=draw(st.sampled_from([0.0, 0.5, 1.5, 2.5])),
    )


@st.composite
def sweep_records(draw: st.DrawFn) -> SweepRecord:
    values = st.floats(min_value=0.0, max_value=1e3, allow_nan=False)
    diss_total = draw(values)
    return SweepRecord(
        nu=draw(st.floats(min_value=1e-6, max_value=1.0)),
        e1_final=draw(values),
        e2_final=draw(values),
        e_sup=draw(values),
        kato_d=draw(st.floats(min_value=0.0, max_value=diss_total)),
        diss_total=diss_total,
        gronwall_max_violation=draw(st.floats(min_value=-1e3, max_value=1e3)),
        wall_clock=draw(values),
        grid=draw(st.text(max_size=12)),
        energy_deficit=draw(st.floats(min_value=-1.0, max_value=1.0)),
    )


def random_velocity(grid: Grid, seed: int = 0) -> VectorField:
    """Smooth periodic field with zero wall rows of v, not divergence free."""
    rng = np.random.default_rng(seed)
    xu, yu = grid.u_points()
    xv, yv = grid.v_points()
    length_x, length_y = grid.domain.length_x, grid.domain.length_y
    a, b, c = rng.normal(size=3)
    u = a * np.sin(np.pi * yu / length_y) * np.cos(2 * np.pi * xu / length_x) + b * yu
    v = c * np.sin(np.pi * yv / length_y) * np.sin(2 * np.pi * xv / length_x)
    v[:, 0] = v[:, -1] = 0.0
    return VectorField(grid, u, v)


def euler_state(sol: EulerSolution, grid: Grid, nu: float, t: float = 0.0) -> FlowState:
    """Viscous state equal to the Euler fields, with the no-slip trace declared."""
    vel = sample_velocity(sol, grid, t, wall_u=(0.0, 0.0))
    return FlowState(sample_density(sol, grid, t), vel, ScalarField.zeros(grid), t, nu)


def power_law_records(exponent: float = 1.0, nus=(0.04, 0.02, 0.01, 0.005)) -> list[SweepRecord]:
    return [
        SweepRecord(
            nu=nu,
            e1_final=3.0 * nu**exponent,
            e2_final=0.0,
            e_sup=3.0 * nu**exponent,
            kato_d=0.5 * nu**exponent,
            diss_total=2.0 * nu**exponent,
            gronwall_max_violation=0.0,
            wall_clock=0.0,
        )
        for nu in nus
    ]
