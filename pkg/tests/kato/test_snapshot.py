import numpy as np
import pytest

from kato.flow.snapshot import decode_snapshot, encode_snapshot, read_snapshot, snapshot_name, write_snapshot
from kato.flow.state import FlowState
from kato.mesh.fields import NodeField, ScalarField, curl_of_scalar
from kato.mesh.geometry import Grid
from kato.util.exceptions import OutputError
from tests.kato.utils.helpers import TmpDirectory


def _state(grid: Grid) -> FlowState:
    x, y = grid.nodes()
    psi = np.sin(np.pi * y) ** 2 * np.cos(2 * np.pi * x)
    psi[:, [0, -1]] = 0.0
    xc, yc = grid.centers()
    return FlowState(
        rho=ScalarField(grid, 1.0 + 0.25 * yc),
        vel=curl_of_scalar(NodeField(grid, psi)),
        pressure=ScalarField(grid, np.cos(2 * np.pi * xc) * 1e-3),
        time=0.375,
        viscosity=0.01,
    )


class TestSnapshot:
    def test_file_restores_state(self, stretched_grid: Grid):
        state = _state(stretched_grid)
        with TmpDirectory("/tmp/kato-tests") as tmp_dir:
            path = write_snapshot(tmp_dir / "nested" / snapshot_name(3), state)
            restored = read_snapshot(path)

        assert path.name == "snapshot_00003.flow"
        assert restored.time == state.time
        assert restored.viscosity == state.viscosity
        assert restored.grid.descriptor == stretched_grid.descriptor
        assert np.array_equal(restored.grid.y_faces, stretched_grid.y_faces)
        for before, after in (
            (state.rho.values, restored.rho.values),
            (state.vel.u, restored.vel.u),
            (state.vel.v, restored.vel.v),
            (state.pressure.values, restored.pressure.values),
        ):
            assert np.array_equal(before, after)

    def test_density_wall_values_survive(self, uniform_grid: Grid):
        state = _state(uniform_grid)
        walled = FlowState(
            ScalarField(uniform_grid, state.rho.values, (1.0, 1.25)),
            state.vel,
            state.pressure,
            state.time,
            state.viscosity,
        )
        restored = decode_snapshot(encode_snapshot(walled))
        assert restored.rho.wall_values == (1.0, 1.25)
        assert restored.pressure.wall_values is None
        assert decode_snapshot(encode_snapshot(state)).rho.wall_values is None

    def test_attaches_given_grid(self, uniform_grid: Grid):
        restored = decode_snapshot(encode_snapshot(_state(uniform_grid)), uniform_grid)
        assert restored.grid is uniform_grid

    def test_header_is_readable_json(self, uniform_grid: Grid):
        data = encode_snapshot(_state(uniform_grid))
        length = int.from_bytes(data[:8], "little")
        assert data[8 : 8 + length].startswith(b"{")
        assert b'"format": "kato-flow"' in data[8 : 8 + length]

    def test_rejects_foreign_format(self, uniform_grid: Grid):
        data = encode_snapshot(_state(uniform_grid)).replace(b"kato-flow", b"kato-flaw", 1)
        with pytest.raises(ValueError, match="unsupported"):
            decode_snapshot(data)

    def test_rejects_truncated_data(self, uniform_grid: Grid):
        data = encode_snapshot(_state(uniform_grid))
        with pytest.raises(ValueError):
            decode_snapshot(data[:4])
        with pytest.raises(ValueError, match="truncated"):
            decode_snapshot(data[:-8])

    def test_rejects_garbage_header(self):
        with pytest.raises(ValueError):
            decode_snapshot((5).to_bytes(8, "little") + b"\xff\xfe{}}")

    def test_missing_file(self, tmp_path):
        with pytest.raises(OutputError):
            read_snapshot(tmp_path / "absent.flow")
