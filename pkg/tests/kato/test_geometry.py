import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kato.mesh.geometry import Domain, Grid, build_grid, distance_to_boundary, layer_mask
from kato.util.exceptions import DomainError
from tests.kato.utils.helpers import channel_grids


class TestDomain:
    def test_defaults(self):
        domain = Domain()
        assert domain.length_x == 1.0
        assert domain.length_y == 1.0
        assert domain.area == 1.0

    @pytest.mark.parametrize("length_x,length_y", [(0.0, 1.0), (1.0, -2.0), (-1.0, -1.0)])
    def test_rejects_non_positive_lengths(self, length_x, length_y):
        with pytest.raises(DomainError):
            Domain(length_x=length_x, length_y=length_y)

    def test_distance_to_boundary(self, unit_domain: Domain):
        assert distance_to_boundary(unit_domain, (0.3, 0.2)) == pytest.approx(0.2)
        assert distance_to_boundary(unit_domain, (0.0, 0.75)) == pytest.approx(0.25)
        assert distance_to_boundary(unit_domain, (1.0, 0.0)) == 0.0

    @pytest.mark.parametrize("point", [(0.5, -0.01), (0.5, 1.01), (-0.1, 0.5), (1.2, 0.5)])
    def test_distance_outside_channel(self, unit_domain: Domain, point):
        with pytest.raises(DomainError):
            distance_to_boundary(unit_domain, point)


class TestGrid:
    def test_uniform_faces(self, unit_domain: Domain):
        grid = build_grid(unit_domain, nx=4, ny=8)
        assert np.allclose(grid.y_faces, np.linspace(0.0, 1.0, 9))
        assert grid.x_spacing == 0.25
        assert grid.descriptor == "4x8@0"
        assert grid.min_dy == pytest.approx(0.125)

    def test_stretched_grid_clusters_at_walls(self, unit_domain: Domain):
        grid = build_grid(unit_domain, nx=4, ny=64, stretch=2.0)
        assert grid.y_faces[0] == 0.0
        assert grid.y_faces[-1] == 1.0
        assert grid.dy[0] < grid.dy[32] / 4
        assert grid.wall_cell_height == pytest.approx(grid.dy[0])
        assert np.allclose(grid.dy, grid.dy[::-1])

    @pytest.mark.parametrize("nx,ny,stretch", [(3, 8, 0.0), (8, 2, 0.0), (8, 8, -0.5)])
    def test_rejects_invalid_parameters(self, unit_domain: Domain, nx, ny, stretch):
        with pytest.raises(ValueError):
            build_grid(unit_domain, nx=nx, ny=ny, stretch=stretch)

    @given(grid=channel_grids())
    def test_quadrature_weights_cover_domain(self, grid: Grid):
        area = grid.domain.area
        assert np.all(np.diff(grid.y_faces) > 0)
        assert grid.integrate(np.ones((grid.nx, grid.ny))) == pytest.approx(area, rel=1e-12)
        assert np.sum(grid.u_weights) == pytest.approx(area, rel=1e-12)
        assert np.sum(grid.v_weights) == pytest.approx(area, rel=1e-12)
        assert np.sum(grid.dy_faces) == pytest.approx(grid.domain.length_y, rel=1e-12)

    @given(grid=channel_grids())
    def test_sample_locations(self, grid: Grid):
        xu, yu = grid.u_points()
        xv, yv = grid.v_points()
        x, y = grid.nodes()
        assert xu.shape == (grid.nx, grid.ny)
        assert xv.shape == (grid.nx, grid.ny + 1)
        assert x.shape == (grid.nx, grid.ny + 1)
        assert np.allclose(yu[0], grid.y_centers)
        assert np.allclose(yv[0], grid.y_faces)
        assert np.allclose(xv[:, 0], grid.x_centers)
        assert np.all(grid.center_distance > 0)

    def test_dict_round_trip(self, stretched_grid: Grid):
        rebuilt = Grid.from_dict(stretched_grid.dictify())
        assert rebuilt.descriptor == stretched_grid.descriptor
        assert np.array_equal(rebuilt.y_faces, stretched_grid.y_faces)
        assert rebuilt.domain == stretched_grid.domain


class TestLayerMask:
    def test_grid_aligned_layer(self, unit_domain: Domain):
        grid = build_grid(unit_domain, nx=4, ny=32)
        mask = layer_mask(grid, 6 / 32)
        assert mask.strip_cells() == pytest.approx(6.0)
        assert mask.area == pytest.approx(2 * 6 / 32)
        assert np.all(mask.weights[:, 6:26] == 0)

    @given(grid=channel_grids(), fraction=st.floats(min_value=0.01, max_value=0.49))
    def test_area_is_exact_overlap(self, grid: Grid, fraction: float):
        thickness = fraction * grid.domain.length_y
        mask = layer_mask(grid, thickness)
        assert np.all((mask.weights >= 0) & (mask.weights <= 1))
        assert mask.area == pytest.approx(2 * thickness * grid.domain.length_x, rel=1e-10)

    @given(grid=channel_grids(), small=st.floats(0.01, 0.3), extra=st.floats(0.0, 0.3))
    @settings(max_examples=50)
    def test_weights_grow_with_thickness(self, grid: Grid, small: float, extra: float):
        thin = layer_mask(grid, small * grid.domain.length_y)
        thick = layer_mask(grid, (small + extra) * grid.domain.length_y)
        assert np.all(thick.weights >= thin.weights - 1e-15)

    def test_whole_channel_when_layers_meet(self, uniform_grid: Grid):
        mask = layer_mask(uniform_grid, 0.6)
        assert np.all(mask.weights == 1.0)

    @pytest.mark.parametrize("thickness", [0.0, -0.1])
    def test_rejects_non_positive_thickness(self, uniform_grid: Grid, thickness):
        with pytest.raises(ValueError):
            layer_mask(uniform_grid, thickness)
