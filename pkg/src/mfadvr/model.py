"""Tensor-product B-spline volume model: evaluation and MFAMOD1 files.

Queries take parameters in the unit cube.  Physical coordinates are mapped
with :meth:`MfaModel.normalize`, and parameter-space gradients are turned
into physical ones with :meth:`MfaModel.physical_gradient`.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass
from functools import cached_property

import numba as nb
import numpy as np

from .bspline import (
    KnotVector,
    collocation_matrix,
    span_polynomials,
    span_table,
    validate_knots,
)
from .errors import ConfigError, DomainError, FormatError

__all__ = [
    "MfaModel",
    "eval_value",
    "eval_gradient",
    "eval_points",
    "eval_gradients",
    "eval_grid",
    "save_model",
    "load_model",
    "MAX_DEGREE",
    "SCRATCH_SIZE",
]

MAGIC = b"MFAMOD1"
VERSION = 1
MAX_DEGREE = 15
SCRATCH_SIZE = 6 * (MAX_DEGREE + 1)

_HEADER = struct.Struct("<3I3I3I2d6d")


@dataclass(frozen=True, eq=False)
class MfaModel:
    """Immutable tensor-product B-spline model of a scalar volume.

    ``ctrl`` is indexed ``[i, j, k]`` along (u, v, w).  ``domain_bounds`` is a
    ``(2, 3)`` array of physical minimum and maximum corners.
    """

    knot_vectors: tuple
    ctrl: np.ndarray
    value_range: tuple
    domain_bounds: np.ndarray

    def __post_init__(self):
        kvs = tuple(self.knot_vectors)
        if len(kvs) != 3 or not all(isinstance(kv, KnotVector) for kv in kvs):
            raise ConfigError("a model needs exactly three KnotVector instances")
        ctrl = np.ascontiguousarray(self.ctrl, dtype=np.float64)
        if ctrl.shape != tuple(kv.n_ctrl for kv in kvs):
            raise ConfigError(f"ctrl shape {ctrl.shape} does not match knot vectors {[kv.n_ctrl for kv in kvs]}")
        for kv in kvs:
            if kv.degree > MAX_DEGREE:
                raise ConfigError(f"degree {kv.degree} exceeds the supported maximum {MAX_DEGREE}")
            if kv.n_ctrl < kv.degree + 1:
                raise ConfigError("each dimension needs at least degree+1 control values")
        lo, hi = (float(x) for x in self.value_range)
        if not lo <= hi:
            raise ConfigError(f"value_range min {lo} exceeds max {hi}")
        bounds = np.array(self.domain_bounds, dtype=np.float64).reshape(2, 3)
        if np.any(bounds[0] >= bounds[1]):
            raise ConfigError(f"domain bounds must satisfy min < max per axis, got {bounds.tolist()}")
        ctrl.setflags(write=False)
        bounds.setflags(write=False)
        object.__setattr__(self, "knot_vectors", kvs)
        object.__setattr__(self, "ctrl", ctrl)
        object.__setattr__(self, "value_range", (lo, hi))
        object.__setattr__(self, "domain_bounds", bounds)

    @property
    def degrees(self) -> tuple:
        return tuple(kv.degree for kv in self.knot_vectors)

    @property
    def nctrl(self) -> tuple:
        return self.ctrl.shape

    @property
    def extent(self) -> np.ndarray:
        return self.domain_bounds[1] - self.domain_bounds[0]

    def normalize(self, xyz) -> np.ndarray:
        """Map physical points to the parameter cube, clipping round-off."""
        q = (np.asarray(xyz, dtype=np.float64) - self.domain_bounds[0]) / self.extent
        return np.clip(q, 0.0, 1.0)

    def physical_gradient(self, grad) -> np.ndarray:
        return np.asarray(grad, dtype=np.float64) / self.extent

    @cached_property
    def _kernel_data(self):
        return pack_kernel_data(self)

    def kernel_data(self) -> tuple:
        """``(ctrl, fdata, idata)`` consumed by the compiled query kernels (see ``pack_kernel_data``)."""
        return self._kernel_data

    def __eq__(self, other):
        if not isinstance(other, MfaModel):
            return NotImplemented
        return (
            self.knot_vectors == other.knot_vectors
            and np.array_equal(self.ctrl, other.ctrl)
            and self.value_range == other.value_range
            and np.array_equal(self.domain_bounds, other.domain_bounds)
        )

    def __repr__(self):
        return (
            f"MfaModel(degrees={self.degrees}, nctrl={self.nctrl}, "
            f"value_range={self.value_range}, bounds={self.domain_bounds.tolist()})"
        )


# --------------------------------------------------------------------------
# compiled queries
# --------------------------------------------------------------------------
#
# The kernel bodies take the degrees as arguments.  ``query_kernels`` wraps
# them in closures where the degrees are compile-time constants, so the
# small per-axis loops unroll; the generic loops below pass them at runtime.
# Both paths run the same code.

_AXIS = 2 * (MAX_DEGREE + 1)
_HDR = 8  # ints per axis in the idata header
_EXT = 3 * _HDR  # idata slot holding the fdata offset of the physical extent


def pack_kernel_data(m: MfaModel) -> tuple:
    """Flatten everything a query needs into three arrays.

    ``fdata`` holds, per axis, the knots, the span polynomials and the inverse
    span widths, followed by the physical extent.  ``idata`` starts with an
    8-int header per axis ``(degree, knot offset, knot count, polynomial
    offset, width offset, table offset, table length, 0)`` followed by the
    span lookup tables.  Few arguments keep calls through the renderer's
    source interface cheap.
    """
    floats, ints = [], []
    header = np.zeros(_EXT + 1, dtype=np.int64)
    fpos = 0
    ipos = header.size
    for a, kv in enumerate(m.knot_vectors):
        coef, inv_width = span_polynomials(kv)
        table = span_table(kv)
        h = a * _HDR
        header[h : h + 7] = (
            kv.degree,
            fpos,
            kv.knots.size,
            fpos + kv.knots.size,
            fpos + kv.knots.size + coef.size,
            ipos,
            table.size,
        )
        floats += [kv.knots, coef.ravel(), inv_width]
        fpos += kv.knots.size + coef.size + inv_width.size
        ints.append(table)
        ipos += table.size
    header[_EXT] = fpos
    floats.append(m.extent)
    fdata = np.concatenate(floats)
    idata = np.concatenate([header] + ints)
    fdata.setflags(write=False)
    idata.setflags(write=False)
    return (m.ctrl, fdata, idata)


@nb.njit(cache=True, nogil=True, inline="always")
def _axis_span(fdata, idata, a, p, u):
    h = a * _HDR
    ko = idata[h + 1]
    last = idata[h + 2] - p - 2
    m = idata[h + 6]
    b = int(u * m)
    if b >= m:
        b = m - 1
    span = idata[idata[h + 5] + b]
    while span < last and u >= fdata[ko + span + 1]:
        span += 1
    t = (u - fdata[ko + span]) * fdata[idata[h + 4] + span - p]
    base = idata[h + 3] + (span - p) * (p + 1) * (p + 1)
    return span - p, t, base


@nb.njit(cache=True, nogil=True, inline="always")
def _axis_values(fdata, idata, a, p, u, s, o):
    first, t, base = _axis_span(fdata, idata, a, p, u)
    for r in range(p + 1):
        row = base + r * (p + 1)
        acc = fdata[row + p]
        for k in range(p - 1, -1, -1):
            acc = acc * t + fdata[row + k]
        s[o + r] = acc
    return first


@nb.njit(cache=True, nogil=True, inline="always")
def _axis_derivs(fdata, idata, a, p, u, s, o):
    """Values at ``s[o:]`` and d/du at ``s[o + MAX_DEGREE + 1:]``."""
    first, t, base = _axis_span(fdata, idata, a, p, u)
    iw = fdata[idata[a * _HDR + 4] + first]
    for r in range(p + 1):
        row = base + r * (p + 1)
        acc = fdata[row + p]
        der = 0.0
        for k in range(p - 1, -1, -1):
            der = der * t + acc
            acc = acc * t + fdata[row + k]
        s[o + r] = acc
        s[o + MAX_DEGREE + 1 + r] = der * iw
    return first


@nb.njit(cache=True, nogil=True, inline="always")
def value_body(data, pu, pv, pw, u, v, w, s):
    ctrl, fdata, idata = data
    i0 = _axis_values(fdata, idata, 0, pu, u, s, 0)
    j0 = _axis_values(fdata, idata, 1, pv, v, s, _AXIS)
    k0 = _axis_values(fdata, idata, 2, pw, w, s, 2 * _AXIS)
    ov = _AXIS
    ow = 2 * _AXIS
    val = 0.0
    for a in range(pu + 1):
        sa = 0.0
        for b in range(pv + 1):
            sb = 0.0
            for c in range(pw + 1):
                sb += s[ow + c] * ctrl[i0 + a, j0 + b, k0 + c]
            sa += s[ov + b] * sb
        val += s[a] * sa
    return val


@nb.njit(cache=True, nogil=True, inline="always")
def gradient_body(data, pu, pv, pw, u, v, w, s):
    """Value and parameter-space partials, sharing span search and basis values."""
    ctrl, fdata, idata = data
    i0 = _axis_derivs(fdata, idata, 0, pu, u, s, 0)
    j0 = _axis_derivs(fdata, idata, 1, pv, v, s, _AXIS)
    k0 = _axis_derivs(fdata, idata, 2, pw, w, s, 2 * _AXIS)
    d = MAX_DEGREE + 1
    ov = _AXIS
    ow = 2 * _AXIS
    val = 0.0
    gu = 0.0
    gv = 0.0
    gw = 0.0
    for a in range(pu + 1):
        sa = 0.0
        sa_v = 0.0
        sa_w = 0.0
        for b in range(pv + 1):
            sb = 0.0
            sb_w = 0.0
            for c in range(pw + 1):
                x = ctrl[i0 + a, j0 + b, k0 + c]
                sb += s[ow + c] * x
                sb_w += s[ow + d + c] * x
            sa += s[ov + b] * sb
            sa_v += s[ov + d + b] * sb
            sa_w += s[ov + b] * sb_w
        val += s[a] * sa
        gu += s[d + a] * sa
        gv += s[a] * sa_v
        gw += s[a] * sa_w
    return val, gu, gv, gw


_KERNELS: dict = {}


def query_kernels(degrees) -> tuple:
    """``(value_fn, gradient_fn)`` compiled for fixed degrees.

    Both take ``(data, u, v, w, scratch)`` with ``data = model.kernel_data()``;
    ``gradient_fn`` returns ``(value, d/du, d/dv, d/dw)``.
    """
    key = tuple(int(p) for p in degrees)
    if key not in _KERNELS:
        pu, pv, pw = key

        @nb.njit(nogil=True, inline="always")
        def value_fn(data, u, v, w, s):
            return value_body(data, pu, pv, pw, u, v, w, s)

        @nb.njit(nogil=True, inline="always")
        def gradient_fn(data, u, v, w, s):
            return gradient_body(data, pu, pv, pw, u, v, w, s)

        _KERNELS[key] = (value_fn, gradient_fn)
    return _KERNELS[key]


@nb.njit(cache=True, nogil=True)
def _eval_many(data, pu, pv, pw, params, out):
    s = np.zeros(SCRATCH_SIZE)
    for n in range(params.shape[0]):
        out[n] = value_body(data, pu, pv, pw, params[n, 0], params[n, 1], params[n, 2], s)


@nb.njit(cache=True, nogil=True)
def _grad_many(data, pu, pv, pw, params, out):
    s = np.zeros(SCRATCH_SIZE)
    for n in range(params.shape[0]):
        val, gu, gv, gw = gradient_body(data, pu, pv, pw, params[n, 0], params[n, 1], params[n, 2], s)
        out[n, 0] = val
        out[n, 1] = gu
        out[n, 2] = gv
        out[n, 3] = gw


def _check_params(q) -> np.ndarray:
    q = np.ascontiguousarray(q, dtype=np.float64)
    if q.shape[-1] != 3:
        raise DomainError(f"expected (u, v, w) parameters, got shape {q.shape}")
    if not np.all((q >= 0.0) & (q <= 1.0)):
        raise DomainError("parameters must lie in the unit cube [0, 1]^3")
    return q


def eval_value(m: MfaModel, q) -> float:
    """Model value at parameter point ``q = (u, v, w)``."""
    return float(eval_points(m, _check_params(q).reshape(1, 3))[0])


def eval_gradient(m: MfaModel, q) -> np.ndarray:
    """Parameter-space gradient ``(dF/du, dF/dv, dF/dw)`` at ``q``."""
    return eval_gradients(m, _check_params(q).reshape(1, 3))[0]


def eval_points(m: MfaModel, params) -> np.ndarray:
    """Vectorized :func:`eval_value` over an ``(N, 3)`` parameter array."""
    params = _check_params(np.atleast_2d(params))
    out = np.empty(params.shape[0])
    pu, pv, pw = m.degrees
    _eval_many(m.kernel_data(), pu, pv, pw, params, out)
    return out


def eval_gradients(m: MfaModel, params, with_values: bool = False) -> np.ndarray:
    """Parameter-space gradients, ``(N, 3)``; ``(N, 4)`` with the value first if ``with_values``."""
    params = _check_params(np.atleast_2d(params))
    out = np.empty((params.shape[0], 4))
    pu, pv, pw = m.degrees
    _grad_many(m.kernel_data(), pu, pv, pw, params, out)
    return out if with_values else out[:, 1:].copy()


def eval_grid(m: MfaModel, pu, pv, pw) -> np.ndarray:
    """Evaluate on the tensor lattice ``pu x pv x pw`` via collocation matrices."""
    bu, bv, bw = (collocation_matrix(kv, p) for kv, p in zip(m.knot_vectors, (pu, pv, pw)))
    return np.einsum("ia,jb,kc,abc->ijk", bu, bv, bw, m.ctrl, optimize=True)


# --------------------------------------------------------------------------
# MFAMOD1 serialization
# --------------------------------------------------------------------------


def save_model(m: MfaModel, sink) -> None:
    """Write ``m`` to a path or binary file object in MFAMOD1 format."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(bytes([VERSION]))
    kvs = m.knot_vectors
    bounds = m.domain_bounds
    buf.write(
        _HEADER.pack(
            *(kv.degree for kv in kvs),
            *m.nctrl,
            *(len(kv.knots) for kv in kvs),
            *m.value_range,
            *bounds[0],
            *bounds[1],
        )
    )
    for kv in kvs:
        buf.write(kv.knots.astype("<f8").tobytes())
    # w slowest, u fastest
    buf.write(np.ascontiguousarray(m.ctrl.transpose(2, 1, 0)).astype("<f8").tobytes())
    data = buf.getvalue()
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "wb") as fh:
            fh.write(data)
    else:
        sink.write(data)


def load_model(source) -> MfaModel:
    """Read an MFAMOD1 model from a path, bytes, or binary file object."""
    if isinstance(source, (bytes, bytearray, memoryview)):
        data = bytes(source)
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()

    if data[:7] != MAGIC:
        raise FormatError(f"bad magic {data[:7]!r}, expected {MAGIC!r}", 0)
    if len(data) < 8:
        raise FormatError("missing version byte", 7)
    if data[7] != VERSION:
        raise FormatError(f"unsupported version {data[7]}", 7)
    pos = 8
    if len(data) < pos + _HEADER.size:
        raise FormatError(
            f"header truncated: need {_HEADER.size} bytes, missing {pos + _HEADER.size - len(data)} bytes", len(data)
        )
    fields = _HEADER.unpack_from(data, pos)
    degrees = fields[0:3]
    nctrl = fields[3:6]
    nknots = fields[6:9]
    value_range = fields[9:11]
    bounds = np.array(fields[11:17]).reshape(2, 3)
    pos += _HEADER.size

    for d in range(3):
        if nknots[d] != nctrl[d] + degrees[d] + 1:
            raise FormatError(
                f"dimension {d}: knot count {nknots[d]} != nctrl {nctrl[d]} + degree {degrees[d]} + 1", 8 + 24 + 4 * d
            )
        if degrees[d] > MAX_DEGREE:
            raise FormatError(f"dimension {d}: degree {degrees[d]} exceeds {MAX_DEGREE}", 8 + 4 * d)
    if not value_range[0] <= value_range[1]:
        raise FormatError(f"value_range min {value_range[0]} > max {value_range[1]}", 8 + 36)
    if np.any(bounds[0] >= bounds[1]):
        raise FormatError("domain bounds need min < max on every axis", 8 + 52)

    kvs = []
    for d in range(3):
        nbytes = 8 * nknots[d]
        if len(data) < pos + nbytes:
            raise FormatError(
                f"knot block {d} truncated: need {nbytes} bytes, missing {pos + nbytes - len(data)} bytes", len(data)
            )
        knots = np.frombuffer(data, dtype="<f8", count=nknots[d], offset=pos).astype(np.float64)
        problem = validate_knots(knots, degrees[d])
        if problem:
            raise FormatError(f"knot block {d}: {problem}", pos)
        kvs.append(KnotVector(degrees[d], knots))
        pos += nbytes

    count = nctrl[0] * nctrl[1] * nctrl[2]
    nbytes = 8 * count
    if len(data) < pos + nbytes:
        raise FormatError(
            f"ctrl block truncated: need {nbytes} bytes, missing {pos + nbytes - len(data)} bytes", len(data)
        )
    if len(data) > pos + nbytes:
        raise FormatError(f"{len(data) - pos - nbytes} trailing bytes after ctrl block", pos + nbytes)
    flat = np.frombuffer(data, dtype="<f8", count=count, offset=pos).astype(np.float64)
    ctrl = flat.reshape(nctrl[2], nctrl[1], nctrl[0]).transpose(2, 1, 0)
    return MfaModel(tuple(kvs), ctrl, value_range, bounds)
