"""Piecewise-linear opacity and color transfer functions."""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import ConfigError

__all__ = ["TransferFunction", "ramp", "step", "constant_color", "parse_opacity", "parse_color"]


@dataclass(frozen=True, eq=False)
class TransferFunction:
    """Map scalar values to ``channels`` outputs by linear interpolation.

    Values outside the breakpoints clamp to the end outputs.  Repeating a
    breakpoint makes a jump; the right-hand output applies at the jump.
    """

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.ascontiguousarray(self.xs, dtype=np.float64).reshape(-1)
        ys = np.asarray(self.ys, dtype=np.float64)
        ys = np.ascontiguousarray(ys.reshape(len(xs), -1))
        if len(xs) < 1:
            raise ConfigError("transfer function needs at least one breakpoint")
        if np.any(np.diff(xs) < 0):
            raise ConfigError("transfer function breakpoints must be sorted")
        ys = np.clip(ys, 0.0, 1.0)
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def channels(self) -> int:
        return self.ys.shape[1]

    def __call__(self, value) -> np.ndarray:
        out = np.empty(self.channels)
        tf_eval(self.xs, self.ys, float(value), out)
        return out if self.channels > 1 else out[0]


@nb.njit(cache=True, nogil=True)
def tf_segment(xs, v):
    """Index ``i`` of the segment ``[xs[i], xs[i+1])`` holding ``v`` (-1 / n-1 outside)."""
    n = xs.shape[0]
    if v < xs[0]:
        return -1
    if v >= xs[n - 1]:
        return n - 1
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xs[mid] <= v:
            lo = mid
        else:
            hi = mid
    return lo


@nb.njit(cache=True, nogil=True)
def tf_eval(xs, ys, v, out):
    i = tf_segment(xs, v)
    n = xs.shape[0]
    if i < 0:
        for c in range(ys.shape[1]):
            out[c] = ys[0, c]
        return
    if i >= n - 1:
        for c in range(ys.shape[1]):
            out[c] = ys[n - 1, c]
        return
    t = (v - xs[i]) / (xs[i + 1] - xs[i])
    for c in range(ys.shape[1]):
        out[c] = ys[i, c] + t * (ys[i + 1, c] - ys[i, c])


@nb.njit(cache=True, nogil=True)
def tf_scalar(xs, ys, v):
    """Single-channel evaluation returning the value directly."""
    n = xs.shape[0]
    if v < xs[0]:
        return ys[0, 0]
    if v >= xs[n - 1]:
        return ys[n - 1, 0]
    i = tf_segment(xs, v)
    return ys[i, 0] + (v - xs[i]) / (xs[i + 1] - xs[i]) * (ys[i + 1, 0] - ys[i, 0])


@nb.njit(cache=True, nogil=True)
def tf_rgb(xs, ys, v):
    """Three-channel evaluation returning an (r, g, b) tuple."""
    n = xs.shape[0]
    if v < xs[0]:
        return ys[0, 0], ys[0, 1], ys[0, 2]
    if v >= xs[n - 1]:
        return ys[n - 1, 0], ys[n - 1, 1], ys[n - 1, 2]
    i = tf_segment(xs, v)
    t = (v - xs[i]) / (xs[i + 1] - xs[i])
    return (
        ys[i, 0] + t * (ys[i + 1, 0] - ys[i, 0]),
        ys[i, 1] + t * (ys[i + 1, 1] - ys[i, 1]),
        ys[i, 2] + t * (ys[i + 1, 2] - ys[i, 2]),
    )


def ramp(v0: float, v1: float, a_max: float = 1.0) -> TransferFunction:
    """Opacity rising linearly from 0 at ``v0`` to ``a_max`` at ``v1``."""
    if not v0 < v1:
        raise ConfigError("ramp needs v0 < v1")
    return TransferFunction([v0, v1], [0.0, a_max])


def step(threshold: float, opacity: float = 1.0) -> TransferFunction:
    """Zero opacity below ``threshold``, ``opacity`` at and above it."""
    return TransferFunction([threshold, threshold], [0.0, opacity])


def constant_color(rgb) -> TransferFunction:
    return TransferFunction([0.0], [list(rgb)])


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def parse_opacity(text: str) -> TransferFunction:
    """``ramp:V0:V1[:AMAX]``, ``step:THRESHOLD[:OPACITY]`` or ``points:V,A;V,A;...``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "ramp":
            args = [float(a) for a in rest.split(":")]
            return ramp(*args)
        if kind == "step":
            args = [float(a) for a in rest.split(":")]
            return step(*args)
        if kind == "points":
            pts = [_floats(p) for p in rest.split(";") if p.strip()]
            return TransferFunction([p[0] for p in pts], [p[1] for p in pts])
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"bad opacity transfer function {text!r}: {exc}") from None
    raise ConfigError(f"unknown opacity transfer function {text!r}")


def parse_color(text: str) -> TransferFunction:
    """``constant:R,G,B`` or ``points:V,R,G,B;...`` with channels in [0, 1]."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "constant":
            rgb = _floats(rest)
            if len(rgb) != 3:
                raise ValueError("need three channels")
            return constant_color(rgb)
        if kind == "points":
            pts = [_floats(p) for p in rest.split(";") if p.strip()]
            if any(len(p) != 4 for p in pts):
                raise ValueError("each point needs V,R,G,B")
            return TransferFunction([p[0] for p in pts], [p[1:] for p in pts])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad color transfer function {text!r}: {exc}") from None
    raise ConfigError(f"unknown color transfer function {text!r}")
