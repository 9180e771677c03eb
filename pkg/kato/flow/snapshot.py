"""
`.flow` snapshot files.

Layout: an 8-byte little-endian unsigned header length, a UTF-8 JSON header, then
every field as little-endian float64 in header order.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from kato.flow.state import FlowState
from kato.mesh.fields import ScalarField, VectorField
from kato.mesh.geometry import Grid
from kato.util.exceptions import OutputError
from kato.util.fs import write_atomic

FORMAT_TAG = "kato-flow"
FORMAT_VERSION = 1
SUFFIX = ".flow"

_FIELD_ORDER = ("rho", "u", "v", "pressure")


def _arrays(state: FlowState) -> dict[str, np.ndarray]:
    return {
        "rho": state.rho.values,
        "u": state.vel.u,
        "v": state.vel.v,
        "pressure": state.pressure.values,
    }


def _walls(field: ScalarField) -> list[float] | None:
    return None if field.wall_values is None else [float(value) for value in field.wall_values]


def _restore_walls(values: list[float] | None) -> tuple[float, float] | None:
    return None if values is None else (float(values[0]), float(values[1]))


def encode_snapshot(state: FlowState) -> bytes:
    arrays = _arrays(state)
    header = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "time": state.time,
        "viscosity": state.viscosity,
        "grid": state.grid.dictify(),
        "wall_u": list(state.vel.wall_u),
        "rho_walls": _walls(state.rho),
        "pressure_walls": _walls(state.pressure),
        "fields": [{"name": name, "shape": list(arrays[name].shape)} for name in _FIELD_ORDER],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    body = b"".join(np.ascontiguousarray(arrays[name], dtype="<f8").tobytes() for name in _FIELD_ORDER)
    return len(header_bytes).to_bytes(length=8, byteorder="little", signed=False) + header_bytes + body


def decode_snapshot(data: bytes, grid: Grid | None = None) -> FlowState:
    """
    Rebuild a FlowState from snapshot bytes.

    Args:
        data (bytes): File content.
        grid (Grid | None): Grid to attach; rebuilt from the header when omitted.

    Raises:
        ValueError: If the content is not a snapshot of a supported version.
    """
    if len(data) < 8:
        raise ValueError("snapshot is truncated")
    header_length = int.from_bytes(data[:8], byteorder="little", signed=False)
    try:
        header = json.loads(data[8 : 8 + header_length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise ValueError(f"snapshot header is unreadable: {err}") from err
    if not isinstance(header, dict):
        raise ValueError("snapshot header is not a map")
    if header.get("format") != FORMAT_TAG or header.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported snapshot format {header.get('format')} v{header.get('version')}")

    grid = grid or Grid.from_dict(header["grid"])
    offset = 8 + header_length
    arrays = {}
    for entry in header["fields"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape))
        chunk = data[offset : offset + 8 * count]
        if len(chunk) != 8 * count:
            raise ValueError(f"snapshot field {entry['name']} is truncated")
        arrays[entry["name"]] = np.frombuffer(chunk, dtype="<f8").reshape(shape).astype(np.float64)
        offset += 8 * count

    vel = VectorField(grid, arrays["u"], arrays["v"], tuple(header["wall_u"]))
    return FlowState(
        rho=ScalarField(grid, arrays["rho"], _restore_walls(header.get("rho_walls"))),
        vel=vel,
        pressure=ScalarField(grid, arrays["pressure"], _restore_walls(header.get("pressure_walls"))),
        time=float(header["time"]),
        viscosity=float(header["viscosity"]),
    )


def snapshot_name(index: int) -> str:
    return f"snapshot_{index:05d}{SUFFIX}"


def write_snapshot(path: Path, state: FlowState) -> Path:
    return write_atomic(Path(path), encode_snapshot(state))


def read_snapshot(path: Path, grid: Grid | None = None) -> FlowState:
    try:
        data = Path(path).read_bytes()
    except OSError as err:
        raise OutputError(f"cannot read snapshot {path}: {err}") from err
    return decode_snapshot(data, grid)
