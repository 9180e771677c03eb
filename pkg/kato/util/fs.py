import os
from pathlib import Path

from kato.util.exceptions import OutputError


def write_atomic(path: Path, data: bytes | str) -> Path:
    """
    Write data to path via a temporary sibling file and an atomic rename.

    Args:
        path (Path): Destination file. Parent directories are created.
        data (bytes | str): Content; strings are encoded as UTF-8.

    Returns:
        Path: The destination path.

    Raises:
        OutputError: If the destination cannot be written. No partial file is left behind.
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    tmp_path = path.with_name(f".{path.name}.tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(tmp_path, "wb") as o_file:
            o_file.write(data)
        os.replace(tmp_path, path)
    except OSError as err:
        try:
            os.remove(tmp_path)
        except OSError:
            pass  # cleanup if failed
        raise OutputError(f"cannot write {path}: {err}") from err
    return path


def run_directory(output_dir: Path, nu: float) -> Path:
    return Path(output_dir) / f"nu_{nu:.6g}"
