"""Discrete inputs: structured grids and scattered point clouds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = ["ScalarGrid", "PointCloud", "as_bounds"]


def as_bounds(bounds) -> np.ndarray:
    """Coerce ``(x0, y0, z0, x1, y1, z1)`` or ``[[mins], [maxs]]`` to a (2, 3) array."""
    b = np.array(bounds, dtype=np.float64).reshape(2, 3)
    if not np.all(np.isfinite(b)):
        raise ConfigError("bounds must be finite")
    if np.any(b[0] >= b[1]):
        raise ConfigError(f"bounds need min < max on every axis, got {b.tolist()}")
    return b


@dataclass(frozen=True, eq=False)
class ScalarGrid:
    """Structured scalar volume sampled on a cell-vertex lattice.

    ``values`` has shape ``dims`` and is indexed ``[ix, iy, iz]``.  A flat
    array is accepted and read x-fastest, the layout of raw volume files.
    """

    dims: tuple
    bounds: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or min(dims) < 2:
            raise ConfigError(f"grid dims must be three integers >= 2, got {dims}")
        values = np.asarray(self.values, dtype=np.float64)
        if values.size != dims[0] * dims[1] * dims[2]:
            raise ConfigError(f"expected {dims[0] * dims[1] * dims[2]} values for dims {dims}, got {values.size}")
        if values.ndim == 1:
            values = values.reshape(dims, order="F")
        elif values.shape != dims:
            raise ConfigError(f"values shape {values.shape} does not match dims {dims}")
        values = np.ascontiguousarray(values)
        values.setflags(write=False)
        bounds = as_bounds(self.bounds)
        bounds.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "values", values)

    @property
    def spacing(self) -> np.ndarray:
        return (self.bounds[1] - self.bounds[0]) / (np.array(self.dims) - 1)

    def axes(self) -> list[np.ndarray]:
        """Physical node coordinates along each axis, endpoints exact."""
        return [np.linspace(self.bounds[0, d], self.bounds[1, d], self.dims[d]) for d in range(3)]

    @property
    def value_range(self) -> tuple:
        return float(self.values.min()), float(self.values.max())

    def to_point_cloud(self) -> PointCloud:
        x, y, z = np.meshgrid(*self.axes(), indexing="ij")
        pts = np.column_stack([x.ravel(), y.ravel(), z.ravel()])
        return PointCloud(pts, self.values.ravel())


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Scattered samples: ``points`` is (N, 3), ``values`` is (N,)."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64).reshape(-1, 3)
        vals = np.ascontiguousarray(self.values, dtype=np.float64).reshape(-1)
        if len(pts) != len(vals) or len(pts) == 0:
            raise ConfigError(f"need matching, nonempty points/values, got {len(pts)} and {len(vals)}")
        pts.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def bounding_box(self) -> np.ndarray:
        return np.stack([self.points.min(axis=0), self.points.max(axis=0)])
