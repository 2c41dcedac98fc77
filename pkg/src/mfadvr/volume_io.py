"""Raw scalar volumes with a text sidecar, and plain-text point clouds.

A raw volume is a header-less stream of little-endian float32 values with
x varying fastest, i.e. a row-major ``[z][y][x]`` array.  Its metadata lives
in ``<raw path>.txt``::

    dims=64,64,64
    bounds=-1,-1,-1,1,1,1
    order=row-major

Point clouds are text files with one ``x y z value`` sample per line; blank
lines and ``#`` comments are skipped.  Writers add a sidecar holding
``count`` and the sampling ``bounds``; it is optional when reading.
"""

from __future__ import annotations

import os

import numpy as np

from .data import PointCloud, ScalarGrid
from .errors import ConfigError, FormatError

__all__ = [
    "sidecar_path",
    "write_raw_grid",
    "read_raw_grid",
    "read_sidecar",
    "write_point_cloud",
    "read_point_cloud",
    "read_cloud_bounds",
    "is_grid_file",
]

RAW_DTYPE = np.dtype("<f4")
ORDER = "row-major"


def sidecar_path(path) -> str:
    return os.fspath(path) + ".txt"


def _fmt(x: float) -> str:
    return repr(float(x))


def write_raw_grid(grid: ScalarGrid, path) -> None:
    """Write ``grid`` as float32 (x fastest) plus its sidecar."""
    flat = grid.values.astype(RAW_DTYPE).ravel(order="F")
    with open(path, "wb") as fh:
        fh.write(flat.tobytes())
    b = grid.bounds.ravel()
    with open(sidecar_path(path), "w", encoding="ascii") as fh:
        fh.write(f"dims={','.join(str(d) for d in grid.dims)}\n")
        fh.write(f"bounds={','.join(_fmt(x) for x in b)}\n")
        fh.write(f"order={ORDER}\n")


def _parse_keys(text: str) -> dict:
    keys = {}
    offset = 0
    for line in text.splitlines(keepends=True):
        body = line.split("#", 1)[0].strip()
        if body:
            key, sep, val = body.partition("=")
            if not sep:
                raise FormatError(f"sidecar line {body!r} is not key=value", offset)
            keys[key.strip()] = val.strip()
        offset += len(line.encode("utf-8"))
    return keys


def read_sidecar(path) -> dict:
    """Parse the sidecar of raw file ``path`` into ``dims``, ``bounds``, ``order``."""
    side = sidecar_path(path)
    try:
        with open(side, encoding="utf-8") as fh:
            keys = _parse_keys(fh.read())
    except OSError as exc:
        raise FormatError(f"cannot read sidecar {side}: {exc.strerror}") from None
    missing = [k for k in ("dims", "bounds") if k not in keys]
    if missing:
        raise FormatError(f"sidecar {side} lacks keys: {', '.join(missing)}")
    try:
        dims = tuple(int(t) for t in keys["dims"].split(","))
        bounds = tuple(float(t) for t in keys["bounds"].split(","))
    except ValueError as exc:
        raise FormatError(f"sidecar {side}: {exc}") from None
    if len(dims) != 3 or len(bounds) != 6:
        raise FormatError(f"sidecar {side}: dims needs 3 entries and bounds 6")
    order = keys.get("order", ORDER)
    if order != ORDER:
        raise FormatError(f"sidecar {side}: unsupported order {order!r}")
    return {"dims": dims, "bounds": bounds, "order": order}


def read_raw_grid(path) -> ScalarGrid:
    meta = read_sidecar(path)
    dims = meta["dims"]
    need = dims[0] * dims[1] * dims[2] * RAW_DTYPE.itemsize
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None
    if len(data) != need:
        raise FormatError(f"raw volume {path} holds {len(data)} bytes, dims {dims} need {need}", min(len(data), need))
    vals = np.frombuffer(data, dtype=RAW_DTYPE).astype(np.float64)
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise FormatError(f"raw volume {path} contains a non-finite value", bad * RAW_DTYPE.itemsize)
    try:
        return ScalarGrid(dims, meta["bounds"], vals)
    except ConfigError as exc:
        raise FormatError(f"{sidecar_path(path)}: {exc}") from None


def is_grid_file(path) -> bool:
    """True when ``path`` has a sidecar declaring grid ``dims``."""
    try:
        with open(sidecar_path(path), encoding="utf-8") as fh:
            return "dims" in _parse_keys(fh.read())
    except OSError:
        return False


def write_point_cloud(pc: PointCloud, path, bounds=None) -> None:
    rows = np.column_stack([pc.points, pc.values])
    with open(path, "w", encoding="ascii") as fh:
        for r in rows:
            fh.write(" ".join(_fmt(x) for x in r) + "\n")
    b = pc.bounding_box() if bounds is None else np.asarray(bounds, dtype=np.float64).reshape(2, 3)
    with open(sidecar_path(path), "w", encoding="ascii") as fh:
        fh.write(f"count={len(pc)}\n")
        fh.write(f"bounds={','.join(_fmt(x) for x in b.ravel())}\n")


def read_cloud_bounds(path):
    """Bounds from a point-cloud sidecar, or ``None`` when there is none."""
    try:
        with open(sidecar_path(path), encoding="utf-8") as fh:
            keys = _parse_keys(fh.read())
    except OSError:
        return None
    if "bounds" not in keys:
        return None
    try:
        b = [float(t) for t in keys["bounds"].split(",")]
    except ValueError as exc:
        raise FormatError(f"{sidecar_path(path)}: {exc}") from None
    if len(b) != 6:
        raise FormatError(f"{sidecar_path(path)}: bounds needs 6 entries")
    return np.array(b).reshape(2, 3)


def read_point_cloud(path) -> PointCloud:
    """Read ``x y z value`` lines; a malformed line raises FormatError with its line number."""
    pts = []
    vals = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].split()
            if not body:
                continue
            if len(body) != 4:
                raise FormatError(f"{path} line {lineno}: expected 4 numbers, got {len(body)}")
            try:
                x, y, z, v = (float(t) for t in body)
            except ValueError as exc:
                raise FormatError(f"{path} line {lineno}: {exc}") from None
            if not all(np.isfinite((x, y, z, v))):
                raise FormatError(f"{path} line {lineno}: non-finite number")
            pts.append((x, y, z))
            vals.append(v)
    if not vals:
        raise FormatError(f"{path} contains no samples")
    return PointCloud(np.array(pts), np.array(vals))
