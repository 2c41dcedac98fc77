"""Analytic test volumes with exact gradients, and samplers that discretize them.

Two synthetic functions serve as ground truth:

* Gaussian Beam, a radial Gaussian profile scaled into ``[v_min, v_max]``;
* Marschner-Lobb, the classic reconstruction-filter benchmark on ``[-1, 1]^3``.

``MultiBeam`` combines several beams by per-point maximum.  Every field has
a compiled scalar kernel (used by the renderer) and vectorized wrappers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .data import PointCloud, ScalarGrid, as_bounds
from .errors import ConfigError

__all__ = [
    "GaussianBeam",
    "MarschnerLobb",
    "MultiBeam",
    "gaussian_beam",
    "gaussian_beam_grad",
    "marschner_lobb",
    "marschner_lobb_grad",
    "multi_beam",
    "multi_beam_grad",
    "field_value",
    "field_gradient",
    "zoom_study_beams",
    "field_from_name",
    "sample_grid",
    "sample_scattered",
    "DEFAULT_BOUNDS",
]

DEFAULT_BOUNDS = np.array([[-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]])

KIND_BEAMS = 0
KIND_ML = 1


@dataclass(frozen=True)
class GaussianBeam:
    v_min: float = 0.0
    v_max: float = 255.0
    mu: float = 0.0
    sigma: float = 1.0 / 3.0
    radius: float = math.sqrt(3.0)
    center: tuple = (0.0, 0.0, 0.0)

    kind = "gaussian_beam"

    def __post_init__(self):
        if not (self.sigma > 0 and self.radius > 0 and self.v_min <= self.v_max):
            raise ConfigError(f"invalid Gaussian beam parameters: {self}")

    def row(self):
        return [*self.center, self.radius, self.v_min, self.v_max, self.mu, self.sigma]

    def kernel_params(self):
        return KIND_BEAMS, np.array([self.row()], dtype=np.float64)


@dataclass(frozen=True)
class MarschnerLobb:
    f_m: float = 6.0
    alpha: float = 0.25

    kind = "marschner_lobb"

    def __post_init__(self):
        if not (self.alpha > -1 and self.f_m > 0):
            raise ConfigError(f"invalid Marschner-Lobb parameters: {self}")

    def kernel_params(self):
        return KIND_ML, np.array([[self.f_m, self.alpha]], dtype=np.float64)


@dataclass(frozen=True)
class MultiBeam:
    beams: tuple = field(default_factory=lambda: zoom_study_beams())

    kind = "multi_beam"

    def __post_init__(self):
        if len(self.beams) < 1:
            raise ConfigError("a multi-beam field needs at least one beam")

    def kernel_params(self):
        return KIND_BEAMS, np.array([b.row() for b in self.beams], dtype=np.float64)


def zoom_study_beams(grid_size: int = 128, cells=(64, 32, 16, 8), bounds=DEFAULT_BOUNDS) -> tuple:
    """Beams of shrinking size laid along the xy diagonal at mid z.

    Beam ``k`` fills a cube of ``cells[k]`` lattice cells of a ``grid_size``
    grid; cubes are packed corner to corner from the low corner so they are
    disjoint.  Each radius is the cube's half diagonal, so every beam is a
    scaled copy of the standalone Gaussian Beam on its own cube.
    """
    b = np.asarray(bounds, dtype=np.float64).reshape(2, 3)
    cell = (b[1] - b[0]) / (grid_size - 1)
    if sum(cells) > grid_size - 1:
        raise ConfigError(f"beam cubes {cells} do not fit in {grid_size} samples")
    beams = []
    offset = 0
    zc = 0.5 * (b[0, 2] + b[1, 2])
    for s in cells:
        cx = b[0, 0] + (offset + s / 2) * cell[0]
        cy = b[0, 1] + (offset + s / 2) * cell[1]
        half = 0.5 * s * cell
        beams.append(GaussianBeam(radius=float(np.linalg.norm(half)), center=(float(cx), float(cy), float(zc))))
        offset += s
    return tuple(beams)


# --------------------------------------------------------------------------
# compiled kernels
# --------------------------------------------------------------------------


@nb.njit(cache=True, nogil=True)
def _beam_value(row, x, y, z):
    dx = x - row[0]
    dy = y - row[1]
    dz = z - row[2]
    l = math.sqrt(dx * dx + dy * dy + dz * dz) / row[3]
    t = l - row[6]
    return row[4] + (row[5] - row[4]) * math.exp(-(t * t) / (2.0 * row[7] * row[7]))


@nb.njit(cache=True, nogil=True)
def field_value_kernel(kind, params, x, y, z):
    if kind == KIND_ML:
        f_m = params[0, 0]
        alpha = params[0, 1]
        r = math.sqrt(x * x + y * y)
        rho = math.cos(2.0 * math.pi * f_m * math.cos(0.5 * math.pi * r))
        return (1.0 - math.sin(0.5 * math.pi * z) + alpha * (1.0 + rho)) / (2.0 * (1.0 + alpha))
    best = _beam_value(params[0], x, y, z)
    for b in range(1, params.shape[0]):
        v = _beam_value(params[b], x, y, z)
        if v > best:
            best = v
    return best


@nb.njit(cache=True, nogil=True)
def field_gradient_kernel(kind, params, x, y, z):
    if kind == KIND_ML:
        f_m = params[0, 0]
        alpha = params[0, 1]
        scale = 1.0 / (2.0 * (1.0 + alpha))
        gz = -0.5 * math.pi * math.cos(0.5 * math.pi * z) * scale
        r = math.sqrt(x * x + y * y)
        if r == 0.0:
            return 0.0, 0.0, gz
        # d rho / dr
        drho = (
            math.pi
            * math.pi
            * f_m
            * math.sin(0.5 * math.pi * r)
            * math.sin(2.0 * math.pi * f_m * math.cos(0.5 * math.pi * r))
        )
        k = alpha * drho * scale / r
        return k * x, k * y, gz
    best = 0
    bv = _beam_value(params[0], x, y, z)
    for b in range(1, params.shape[0]):
        v = _beam_value(params[b], x, y, z)
        if v > bv:
            bv = v
            best = b
    row = params[best]
    dx = x - row[0]
    dy = y - row[1]
    dz = z - row[2]
    dist = math.sqrt(dx * dx + dy * dy + dz * dz)
    if dist == 0.0:
        return 0.0, 0.0, 0.0
    radius = row[3]
    sigma = row[7]
    t = dist / radius - row[6]
    g = math.exp(-(t * t) / (2.0 * sigma * sigma))
    k = -(row[5] - row[4]) * g * t / (sigma * sigma) / (radius * dist)
    return k * dx, k * dy, k * dz


@nb.njit(cache=True, nogil=True)
def _values_many(kind, params, x, y, z, out):
    for n in range(x.shape[0]):
        out[n] = field_value_kernel(kind, params, x[n], y[n], z[n])


@nb.njit(cache=True, nogil=True)
def _grads_many(kind, params, x, y, z, out):
    for n in range(x.shape[0]):
        gx, gy, gz = field_gradient_kernel(kind, params, x[n], y[n], z[n])
        out[n, 0] = gx
        out[n, 1] = gy
        out[n, 2] = gz


# --------------------------------------------------------------------------
# vectorized API
# --------------------------------------------------------------------------


def _flat(x, y, z):
    x, y, z = np.broadcast_arrays(*(np.asarray(a, dtype=np.float64) for a in (x, y, z)))
    shape = x.shape
    return shape, (np.ascontiguousarray(a).ravel() for a in (x, y, z))


def field_value(spec, x, y, z):
    """Evaluate any field spec at broadcastable coordinates."""
    kind, params = spec.kernel_params()
    shape, (xf, yf, zf) = _flat(x, y, z)
    out = np.empty(xf.shape[0])
    _values_many(kind, params, xf, yf, zf, out)
    return float(out[0]) if shape == () else out.reshape(shape)


def field_gradient(spec, x, y, z):
    """Exact gradient; the last axis of the result holds (d/dx, d/dy, d/dz)."""
    kind, params = spec.kernel_params()
    shape, (xf, yf, zf) = _flat(x, y, z)
    out = np.empty((xf.shape[0], 3))
    _grads_many(kind, params, xf, yf, zf, out)
    return out.reshape(shape + (3,))


def gaussian_beam(x, y, z, spec: GaussianBeam = GaussianBeam()):
    return field_value(spec, x, y, z)


def gaussian_beam_grad(x, y, z, spec: GaussianBeam = GaussianBeam()):
    return field_gradient(spec, x, y, z)


def marschner_lobb(x, y, z, spec: MarschnerLobb = MarschnerLobb()):
    return field_value(spec, x, y, z)


def marschner_lobb_grad(x, y, z, spec: MarschnerLobb = MarschnerLobb()):
    return field_gradient(spec, x, y, z)


def multi_beam(x, y, z, spec: MultiBeam | None = None):
    return field_value(spec or MultiBeam(), x, y, z)


def multi_beam_grad(x, y, z, spec: MultiBeam | None = None):
    return field_gradient(spec or MultiBeam(), x, y, z)


_NAMES = {
    "gaussian-beam": GaussianBeam,
    "marschner-lobb": MarschnerLobb,
    "multi-beam": MultiBeam,
}


def field_from_name(name: str):
    """Default spec for a CLI-style name (``gaussian-beam`` etc.)."""
    key = name.replace("_", "-").lower()
    if key not in _NAMES:
        raise ConfigError(f"unknown field {name!r}; choose from {sorted(_NAMES)}")
    return _NAMES[key]()


# --------------------------------------------------------------------------
# samplers
# --------------------------------------------------------------------------


def sample_grid(spec, dims, bounds=DEFAULT_BOUNDS) -> ScalarGrid:
    """Sample on the cell-vertex lattice, both boundary planes included."""
    dims = tuple(int(d) for d in dims)
    b = as_bounds(bounds)
    axes = [np.linspace(b[0, d], b[1, d], dims[d]) for d in range(3)]
    x, y, z = np.meshgrid(*axes, indexing="ij")
    return ScalarGrid(dims, b, field_value(spec, x, y, z))


def sample_scattered(spec, n: int, bounds=DEFAULT_BOUNDS, seed: int = 0) -> PointCloud:
    """``n`` seeded uniform samples inside ``bounds``."""
    if n < 1:
        raise ConfigError("need at least one scattered sample")
    b = as_bounds(bounds)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(b[0], b[1], size=(n, 3))
    return PointCloud(pts, field_value(spec, pts[:, 0], pts[:, 1], pts[:, 2]))
