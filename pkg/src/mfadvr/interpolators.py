"""Local reconstruction filters over a :class:`ScalarGrid`.

Trilinear, tricubic (Lekien-Marsden) and Catmull-Rom, each with a value and
a gradient query.  The compiled kernels take normalized coordinates in the
unit cube, the same convention the renderer uses for every source; the
public functions take physical points.

Boundary policy: Catmull-Rom clamps stencil indices (edge replication);
tricubic node derivatives are central differences, one-sided at the edges.
"""

from __future__ import annotations

import enum
import itertools

import numba as nb
import numpy as np

from .data import ScalarGrid
from .errors import ConfigError, DomainError

__all__ = [
    "FilterKind",
    "trilinear_value",
    "tricubic_value",
    "catmull_rom_value",
    "filter_value",
    "filter_gradient",
    "tricubic_matrix",
]


class FilterKind(enum.Enum):
    TRILINEAR = "trilinear"
    TRICUBIC = "tricubic"
    CATMULL_ROM = "catmull_rom"

    @classmethod
    def parse(cls, name) -> FilterKind:
        if isinstance(name, cls):
            return name
        key = str(name).replace("-", "_").lower()
        for k in cls:
            if k.value == key:
                return k
        raise ConfigError(f"unknown filter {name!r}; choose from {[k.value for k in cls]}")


# derivative orders (dx, dy, dz) in the order of the Lekien-Marsden data vector
_DERIV_TYPES = ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1))


def tricubic_matrix() -> np.ndarray:
    """64x64 integer matrix mapping corner data to tricubic coefficients.

    Data are ordered ``[f, fx, fy, fz, fxy, fxz, fyz, fxyz]`` with 8 corners
    each (corner index ``cx + 2 cy + 4 cz``); coefficient ``i + 4j + 16k``
    multiplies ``x^i y^j z^k`` on the unit cell.
    """

    def mono(power, order, at):
        if order == 0:
            return float(at**power)
        return float(power * at ** (power - 1)) if power >= 1 else 0.0

    B = np.zeros((64, 64))
    for t, (ox, oy, oz) in enumerate(_DERIV_TYPES):
        for c, (cz, cy, cx) in enumerate(itertools.product((0, 1), repeat=3)):
            row = 8 * t + c
            for i, j, k in itertools.product(range(4), repeat=3):
                B[row, i + 4 * j + 16 * k] = mono(i, ox, cx) * mono(j, oy, cy) * mono(k, oz, cz)
    A = np.linalg.inv(B)
    Ai = np.rint(A)
    if np.abs(A - Ai).max() > 1e-9:
        raise AssertionError("tricubic coefficient matrix is not integral")
    return Ai


def _csr(mat):
    indptr = [0]
    indices = []
    data = []
    for row in mat:
        nz = np.flatnonzero(row)
        indices.extend(nz)
        data.extend(row[nz])
        indptr.append(len(indices))
    return np.array(indptr, dtype=np.int64), np.array(indices, dtype=np.int64), np.array(data)


_TRICUBIC_PTR, _TRICUBIC_IDX, _TRICUBIC_VAL = _csr(tricubic_matrix())
TRICUBIC_SCRATCH = 180


# --------------------------------------------------------------------------
# compiled kernels
# --------------------------------------------------------------------------


@nb.njit(cache=True, nogil=True, inline="always")
def _cell(u, n):
    g = u * (n - 1)
    i = int(g)
    if i > n - 2:
        i = n - 2
    if i < 0:
        i = 0
    return i, g - i


@nb.njit(cache=True, nogil=True)
def trilinear_kernel(vals, u, v, w):
    nx, ny, nz = vals.shape
    i, tx = _cell(u, nx)
    j, ty = _cell(v, ny)
    k, tz = _cell(w, nz)
    c00 = vals[i, j, k] * (1 - tx) + vals[i + 1, j, k] * tx
    c10 = vals[i, j + 1, k] * (1 - tx) + vals[i + 1, j + 1, k] * tx
    c01 = vals[i, j, k + 1] * (1 - tx) + vals[i + 1, j, k + 1] * tx
    c11 = vals[i, j + 1, k + 1] * (1 - tx) + vals[i + 1, j + 1, k + 1] * tx
    c0 = c00 * (1 - ty) + c10 * ty
    c1 = c01 * (1 - ty) + c11 * ty
    return c0 * (1 - tz) + c1 * tz


@nb.njit(cache=True, nogil=True, inline="always")
def _node_diff(vals, i, j, k, axis):
    # central difference in index units, one-sided on the boundary
    n = vals.shape[axis]
    q = i if axis == 0 else (j if axis == 1 else k)
    lo = q - 1 if q > 0 else 0
    hi = q + 1 if q < n - 1 else n - 1
    if axis == 0:
        a = vals[lo, j, k]
        b = vals[hi, j, k]
    elif axis == 1:
        a = vals[i, lo, k]
        b = vals[i, hi, k]
    else:
        a = vals[i, j, lo]
        b = vals[i, j, hi]
    return (b - a) / (hi - lo)


@nb.njit(cache=True, nogil=True)
def trilinear_gradient_kernel(vals, u, v, w):
    """Index-space gradient: node central differences, trilinearly blended."""
    nx, ny, nz = vals.shape
    i, tx = _cell(u, nx)
    j, ty = _cell(v, ny)
    k, tz = _cell(w, nz)
    gx = 0.0
    gy = 0.0
    gz = 0.0
    for c in range(8):
        dx = c & 1
        dy = (c >> 1) & 1
        dz = (c >> 2) & 1
        wgt = (tx if dx else 1 - tx) * (ty if dy else 1 - ty) * (tz if dz else 1 - tz)
        gx += wgt * _node_diff(vals, i + dx, j + dy, k + dz, 0)
        gy += wgt * _node_diff(vals, i + dx, j + dy, k + dz, 1)
        gz += wgt * _node_diff(vals, i + dx, j + dy, k + dz, 2)
    return gx, gy, gz


@nb.njit(cache=True, nogil=True, inline="always")
def _cr_weights(t):
    t2 = t * t
    t3 = t2 * t
    return (
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    )


@nb.njit(cache=True, nogil=True, inline="always")
def _cr_slopes(t):
    t2 = t * t
    return (
        0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
        0.5 * (9.0 * t2 - 10.0 * t),
        0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
        0.5 * (3.0 * t2 - 2.0 * t),
    )


@nb.njit(cache=True, nogil=True, inline="always")
def _clamped_taps(i, n):
    return (max(i - 1, 0), i, i + 1, min(i + 2, n - 1))


@nb.njit(cache=True, nogil=True)
def catmull_rom_kernel(vals, u, v, w):
    nx, ny, nz = vals.shape
    i, tx = _cell(u, nx)
    j, ty = _cell(v, ny)
    k, tz = _cell(w, nz)
    wx = _cr_weights(tx)
    wy = _cr_weights(ty)
    wz = _cr_weights(tz)
    ix = _clamped_taps(i, nx)
    iy = _clamped_taps(j, ny)
    iz = _clamped_taps(k, nz)
    val = 0.0
    for a in range(4):
        sa = 0.0
        for b in range(4):
            row = vals[ix[a], iy[b]]
            sb = 0.0
            for c in range(4):
                sb += wz[c] * row[iz[c]]
            sa += wy[b] * sb
        val += wx[a] * sa
    return val


@nb.njit(cache=True, nogil=True)
def catmull_rom_gradient_kernel(vals, u, v, w):
    nx, ny, nz = vals.shape
    i, tx = _cell(u, nx)
    j, ty = _cell(v, ny)
    k, tz = _cell(w, nz)
    wx = _cr_weights(tx)
    wy = _cr_weights(ty)
    wz = _cr_weights(tz)
    dx = _cr_slopes(tx)
    dy = _cr_slopes(ty)
    dz = _cr_slopes(tz)
    ix = _clamped_taps(i, nx)
    iy = _clamped_taps(j, ny)
    iz = _clamped_taps(k, nz)
    gx = 0.0
    gy = 0.0
    gz = 0.0
    for a in range(4):
        sa = 0.0
        sa_y = 0.0
        sa_z = 0.0
        for b in range(4):
            row = vals[ix[a], iy[b]]
            sb = 0.0
            sb_z = 0.0
            for c in range(4):
                f = row[iz[c]]
                sb += wz[c] * f
                sb_z += dz[c] * f
            sa += wy[b] * sb
            sa_y += dy[b] * sb
            sa_z += wy[b] * sb_z
        gx += dx[a] * sa
        gy += wx[a] * sa_y
        gz += wx[a] * sa_z
    return gx, gy, gz


@nb.njit(cache=True, nogil=True, inline="always")
def _axis_taps(q, order, n, taps, base):
    # (index, weight) pairs for the value or derivative at node q
    if order == 0:
        taps[base] = q
        taps[base + 1] = 1.0
        taps[base + 2] = q
        taps[base + 3] = 0.0
    else:
        lo = q - 1 if q > 0 else 0
        hi = q + 1 if q < n - 1 else n - 1
        s = 1.0 / (hi - lo)
        taps[base] = lo
        taps[base + 1] = -s
        taps[base + 2] = hi
        taps[base + 3] = s


@nb.njit(cache=True, nogil=True)
def _tricubic_coeffs(vals, i, j, k, ptr, idx, mat, scratch):
    nx, ny, nz = vals.shape
    data = scratch[0:64]
    coef = scratch[64:128]
    taps = scratch[128:176]
    # scratch[176:180] = (valid, i, j, k) of the cell whose coefficients are
    # in ``coef``; consecutive samples along a ray mostly share a cell.  A
    # scratch buffer must therefore start zeroed and serve a single grid.
    if scratch[176] == 1.0 and scratch[177] == i and scratch[178] == j and scratch[179] == k:
        return coef
    # per axis, corner c in {0,1}, order o in {0,1}: 4 slots at 4*(2c+o)
    for c in range(2):
        for o in range(2):
            _axis_taps(i + c, o, nx, taps, 4 * (2 * c + o))
            _axis_taps(j + c, o, ny, taps, 16 + 4 * (2 * c + o))
            _axis_taps(k + c, o, nz, taps, 32 + 4 * (2 * c + o))
    for t in range(8):
        ox = 1 if (t == 1 or t == 4 or t == 5 or t == 7) else 0
        oy = 1 if (t == 2 or t == 4 or t == 6 or t == 7) else 0
        oz = 1 if (t == 3 or t == 5 or t == 6 or t == 7) else 0
        for corner in range(8):
            cx = corner & 1
            cy = (corner >> 1) & 1
            cz = (corner >> 2) & 1
            bx = 4 * (2 * cx + ox)
            by = 16 + 4 * (2 * cy + oy)
            bz = 32 + 4 * (2 * cz + oz)
            acc = 0.0
            for a in range(1 + ox):
                xi = int(taps[bx + 2 * a])
                xw = taps[bx + 2 * a + 1]
                for b in range(1 + oy):
                    yi = int(taps[by + 2 * b])
                    yw = taps[by + 2 * b + 1] * xw
                    for e in range(1 + oz):
                        acc += yw * taps[bz + 2 * e + 1] * vals[xi, yi, int(taps[bz + 2 * e])]
            data[8 * t + corner] = acc
    for r in range(64):
        s = 0.0
        for p in range(ptr[r], ptr[r + 1]):
            s += mat[p] * data[idx[p]]
        coef[r] = s
    scratch[176] = 1.0
    scratch[177] = i
    scratch[178] = j
    scratch[179] = k
    return coef


@nb.njit(cache=True, nogil=True)
def tricubic_kernel(vals, u, v, w, ptr, idx, mat, scratch):
    nx, ny, nz = vals.shape
    i, tx = _cell(u, nx)
    j, ty = _cell(v, ny)
    k, tz = _cell(w, nz)
    coef = _tricubic_coeffs(vals, i, j, k, ptr, idx, mat, scratch)
    val = 0.0
    for kk in range(3, -1, -1):
        sy = 0.0
        for jj in range(3, -1, -1):
            base = 4 * jj + 16 * kk
            sx = ((coef[base + 3] * tx + coef[base + 2]) * tx + coef[base + 1]) * tx + coef[base]
            sy = sy * ty + sx
        val = val * tz + sy
    return val


@nb.njit(cache=True, nogil=True)
def tricubic_gradient_kernel(vals, u, v, w, ptr, idx, mat, scratch):
    nx, ny, nz = vals.shape
    i, tx = _cell(u, nx)
    j, ty = _cell(v, ny)
    k, tz = _cell(w, nz)
    coef = _tricubic_coeffs(vals, i, j, k, ptr, idx, mat, scratch)
    px = (1.0, tx, tx * tx, tx * tx * tx)
    py = (1.0, ty, ty * ty, ty * ty * ty)
    pz = (1.0, tz, tz * tz, tz * tz * tz)
    dpx = (0.0, 1.0, 2.0 * tx, 3.0 * tx * tx)
    dpy = (0.0, 1.0, 2.0 * ty, 3.0 * ty * ty)
    dpz = (0.0, 1.0, 2.0 * tz, 3.0 * tz * tz)
    gx = 0.0
    gy = 0.0
    gz = 0.0
    for kk in range(4):
        for jj in range(4):
            for ii in range(4):
                a = coef[ii + 4 * jj + 16 * kk]
                gx += a * dpx[ii] * py[jj] * pz[kk]
                gy += a * px[ii] * dpy[jj] * pz[kk]
                gz += a * px[ii] * py[jj] * dpz[kk]
    return gx, gy, gz


# --------------------------------------------------------------------------
# public API
# --------------------------------------------------------------------------


def _normalized(g: ScalarGrid, p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64).reshape(3)
    lo, hi = g.bounds
    if np.any(p < lo) or np.any(p > hi):
        raise DomainError(f"point {p.tolist()} outside grid bounds {g.bounds.tolist()}")
    return np.clip((p - lo) / (hi - lo), 0.0, 1.0)


def _index_scale(g: ScalarGrid) -> np.ndarray:
    return (np.array(g.dims) - 1) / (g.bounds[1] - g.bounds[0])


def trilinear_value(g: ScalarGrid, p) -> float:
    u, v, w = _normalized(g, p)
    return float(trilinear_kernel(g.values, u, v, w))


def tricubic_value(g: ScalarGrid, p) -> float:
    u, v, w = _normalized(g, p)
    return float(tricubic_kernel(g.values, u, v, w, _TRICUBIC_PTR, _TRICUBIC_IDX, _TRICUBIC_VAL, np.zeros(TRICUBIC_SCRATCH)))


def catmull_rom_value(g: ScalarGrid, p) -> float:
    u, v, w = _normalized(g, p)
    return float(catmull_rom_kernel(g.values, u, v, w))


def filter_value(kind, g: ScalarGrid, p) -> float:
    kind = FilterKind.parse(kind)
    if kind is FilterKind.TRILINEAR:
        return trilinear_value(g, p)
    if kind is FilterKind.TRICUBIC:
        return tricubic_value(g, p)
    return catmull_rom_value(g, p)


def filter_gradient(kind, g: ScalarGrid, p) -> np.ndarray:
    """Physical-space gradient of the reconstruction at ``p``."""
    kind = FilterKind.parse(kind)
    u, v, w = _normalized(g, p)
    if kind is FilterKind.TRILINEAR:
        gi = trilinear_gradient_kernel(g.values, u, v, w)
    elif kind is FilterKind.TRICUBIC:
        gi = tricubic_gradient_kernel(
            g.values, u, v, w, _TRICUBIC_PTR, _TRICUBIC_IDX, _TRICUBIC_VAL, np.zeros(TRICUBIC_SCRATCH)
        )
    else:
        gi = catmull_rom_gradient_kernel(g.values, u, v, w)
    return np.array(gi) * _index_scale(g)
