"""Ray-casting direct volume renderer with pluggable sample sources.

Every pixel casts one ray, clipped to the source's bounding box and sampled
at a fixed step.  Each sample position is normalized to the unit cube and
handed to the source's compiled value query; the value goes through the
transfer functions, optionally gets Phong shading from the source's
gradient query, and is composited front to back until the accumulated
opacity exceeds ``o_max``.

Rows are split into contiguous blocks, one per worker thread.  Pixels are
independent, so images do not depend on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numba as nb
import numpy as np

from .data import ScalarGrid, as_bounds
from .errors import ConfigError, RenderError
from .fields import DEFAULT_BOUNDS, field_gradient_kernel, field_value_kernel
from .image import ImageRGBA
from .interpolators import (
    _TRICUBIC_IDX,
    _TRICUBIC_PTR,
    _TRICUBIC_VAL,
    FilterKind,
    catmull_rom_gradient_kernel,
    catmull_rom_kernel,
    trilinear_gradient_kernel,
    trilinear_kernel,
    tricubic_gradient_kernel,
    tricubic_kernel,
)
from .model import _EXT, SCRATCH_SIZE, MfaModel, query_kernels
from .transfer import TransferFunction, constant_color, ramp, step, tf_rgb, tf_scalar

__all__ = [
    "Camera",
    "RenderConfig",
    "SampleSource",
    "CountingSource",
    "RenderResult",
    "mfa_source",
    "filter_source",
    "analytic_source",
    "generate_ray",
    "ray_box_clip",
    "composite_step",
    "shade",
    "render",
    "render_detailed",
    "trace_ray",
    "render_ground_truth",
    "render_mfa",
    "render_filter",
    "value_study_config",
    "gradient_study_config",
]

_SCRATCH = max(SCRATCH_SIZE, 256)


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(3)
    n = np.linalg.norm(v)
    if not n > 0:
        raise ConfigError(f"zero-length vector {v.tolist()}")
    return v / n


@dataclass(frozen=True)
class Camera:
    """Pinhole or orthographic camera.

    ``ortho_height`` is the world-space height of the orthographic view.
    Pixel (0, 0) is the top-left corner of the image.
    """

    eye: tuple
    look_at: tuple = (0.0, 0.0, 0.0)
    up: tuple = (0.0, 0.0, 1.0)
    projection: str = "perspective"
    fov_y: float = 30.0
    ortho_height: float = 2.0
    width: int = 256
    height: int = 256
    _basis: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.width) < 1 or int(self.height) < 1:
            raise ConfigError(f"image size must be at least 1x1, got {self.width}x{self.height}")
        if self.projection not in ("perspective", "orthographic"):
            raise ConfigError(f"unknown projection {self.projection!r}")
        if self.projection == "perspective" and not 0.0 < self.fov_y < 180.0:
            raise ConfigError(f"fov_y must be in (0, 180), got {self.fov_y}")
        if self.projection == "orthographic" and not self.ortho_height > 0:
            raise ConfigError("ortho_height must be positive")
        fwd = _unit(np.subtract(self.look_at, self.eye))
        right = np.cross(fwd, _unit(self.up))
        if np.linalg.norm(right) < 1e-12:
            raise ConfigError("camera up vector is parallel to the view direction")
        right /= np.linalg.norm(right)
        up = np.cross(right, fwd)
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        object.__setattr__(self, "_basis", np.stack([fwd, right, up]))

    @property
    def forward(self) -> np.ndarray:
        return self._basis[0].copy()

    def kernel_params(self) -> np.ndarray:
        fwd, right, up = self._basis
        persp = self.projection == "perspective"
        scale = math.tan(math.radians(self.fov_y) / 2.0) if persp else self.ortho_height / 2.0
        return np.concatenate(
            [np.asarray(self.eye, dtype=np.float64), fwd, right, up, [scale, self.width / self.height, float(persp)]]
        )

    @classmethod
    def framing(
        cls,
        bounds,
        width=256,
        height=256,
        direction=(1.0, -0.8, 0.6),
        projection="perspective",
        fov_y=30.0,
        margin=1.05,
        target=None,
        radius=None,
    ) -> Camera:
        """Camera looking at ``target`` (default: box center) from ``direction``.

        ``radius`` is the half-size of the region to frame (default: the
        box's half diagonal).
        """
        b = as_bounds(bounds)
        center = 0.5 * (b[0] + b[1]) if target is None else np.asarray(target, dtype=np.float64)
        r = 0.5 * float(np.linalg.norm(b[1] - b[0])) if radius is None else float(radius)
        d = _unit(direction)
        up = (0.0, 0.0, 1.0) if abs(d[2]) < 0.99 else (0.0, 1.0, 0.0)
        if projection == "perspective":
            dist = r * margin / math.sin(math.radians(fov_y) / 2.0)
            return cls(tuple(center + d * dist), tuple(center), up, "perspective", fov_y, 2.0, width, height)
        return cls(tuple(center + d * 3.0 * r), tuple(center), up, "orthographic", fov_y, 2.0 * r * margin, width, height)


def _rgb(x) -> tuple:
    a = np.broadcast_to(np.asarray(x, dtype=np.float64), (3,))
    return tuple(float(c) for c in a)


@dataclass(frozen=True)
class RenderConfig:
    """Everything that controls a render except the sample source.

    ``step`` is the sample distance as a fraction of the volume diagonal.
    ``light_dir`` points toward the light; ``None`` puts the light at the eye.
    """

    camera: Camera
    opacity_tf: TransferFunction
    color_tf: TransferFunction
    step: float = 1e-3
    shading: bool = False
    light_dir: tuple | None = None
    ambient: tuple = (0.3, 0.3, 0.3)
    diffuse: tuple = (0.7, 0.7, 0.7)
    specular: tuple = (0.3, 0.3, 0.3)
    shininess: float = 20.0
    o_max: float = 0.98
    background: tuple = (0.0, 0.0, 0.0, 0.0)
    opacity_correction: bool = False

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError(f"step must be positive, got {self.step}")
        if not 0.0 < self.o_max <= 1.0:
            raise ConfigError(f"o_max must be in (0, 1], got {self.o_max}")
        if self.opacity_tf.channels != 1 or self.color_tf.channels != 3:
            raise ConfigError("opacity TF needs 1 channel and color TF needs 3")
        for name in ("ambient", "diffuse", "specular"):
            object.__setattr__(self, name, _rgb(getattr(self, name)))
        bg = tuple(float(c) for c in self.background)
        if len(bg) != 4 or min(bg) < 0 or max(bg) > 1:
            raise ConfigError("background must be four channels in [0, 1]")
        object.__setattr__(self, "background", bg)
        if self.light_dir is not None:
            object.__setattr__(self, "light_dir", tuple(_unit(self.light_dir)))

    def shading_params(self) -> np.ndarray:
        light = (0.0, 0.0, 0.0) if self.light_dir is None else self.light_dir
        headlight = 1.0 if self.light_dir is None else 0.0
        return np.array([*light, headlight, *self.ambient, *self.diffuse, *self.specular, self.shininess])

    def with_camera(self, **changes) -> RenderConfig:
        return replace(self, camera=replace(self.camera, **changes))


# --------------------------------------------------------------------------
# sample sources
# --------------------------------------------------------------------------


_MFA_SOURCES: dict = {}


def _mfa_fns(degrees):
    """Renderer-facing MFA queries; the gradient is converted to physical units."""
    if degrees not in _MFA_SOURCES:
        value_fn, gradient_fn = query_kernels(degrees)

        @nb.njit(nogil=True, inline="always")
        def physical_gradient(data, u, v, w, scratch):
            fdata = data[1]
            e = data[2][_EXT]
            _, gu, gv, gw = gradient_fn(data, u, v, w, scratch)
            return gu / fdata[e], gv / fdata[e + 1], gw / fdata[e + 2]

        _MFA_SOURCES[degrees] = (value_fn, physical_gradient)
    return _MFA_SOURCES[degrees]


@nb.njit(cache=True, nogil=True, inline="always")
def _trilinear_value(data, u, v, w, scratch):
    return trilinear_kernel(data[0], u, v, w)


@nb.njit(cache=True, nogil=True, inline="always")
def _trilinear_grad(data, u, v, w, scratch):
    s = data[1]
    gx, gy, gz = trilinear_gradient_kernel(data[0], u, v, w)
    return gx * s[0], gy * s[1], gz * s[2]


@nb.njit(cache=True, nogil=True, inline="always")
def _catmull_rom_value(data, u, v, w, scratch):
    return catmull_rom_kernel(data[0], u, v, w)


@nb.njit(cache=True, nogil=True, inline="always")
def _catmull_rom_grad(data, u, v, w, scratch):
    s = data[1]
    gx, gy, gz = catmull_rom_gradient_kernel(data[0], u, v, w)
    return gx * s[0], gy * s[1], gz * s[2]


@nb.njit(cache=True, nogil=True, inline="always")
def _tricubic_value(data, u, v, w, scratch):
    vals, s, ptr, idx, mat = data
    return tricubic_kernel(vals, u, v, w, ptr, idx, mat, scratch)


@nb.njit(cache=True, nogil=True, inline="always")
def _tricubic_grad(data, u, v, w, scratch):
    vals, s, ptr, idx, mat = data
    gx, gy, gz = tricubic_gradient_kernel(vals, u, v, w, ptr, idx, mat, scratch)
    return gx * s[0], gy * s[1], gz * s[2]


@nb.njit(cache=True, nogil=True, inline="always")
def _analytic_value(data, u, v, w, scratch):
    kind, params, lo, ext = data
    return field_value_kernel(kind, params, lo[0] + u * ext[0], lo[1] + v * ext[1], lo[2] + w * ext[2])


@nb.njit(cache=True, nogil=True, inline="always")
def _analytic_grad(data, u, v, w, scratch):
    kind, params, lo, ext = data
    return field_gradient_kernel(kind, params, lo[0] + u * ext[0], lo[1] + v * ext[1], lo[2] + w * ext[2])


@dataclass(frozen=True, eq=False)
class SampleSource:
    """A queryable volume: compiled value/gradient functions plus their data.

    ``value_fn(data, u, v, w, scratch)`` returns the scalar at normalized
    coordinates; ``grad_fn`` returns the physical-space gradient.
    """

    name: str
    bounds: np.ndarray
    value_range: tuple
    value_fn: object
    grad_fn: object
    data: tuple

    def _uvw(self, point):
        p = np.asarray(point, dtype=np.float64).reshape(3)
        return np.clip((p - self.bounds[0]) / (self.bounds[1] - self.bounds[0]), 0.0, 1.0)

    def value(self, point) -> float:
        u, v, w = self._uvw(point)
        return float(self.value_fn(self.data, u, v, w, np.zeros(_SCRATCH)))

    def gradient(self, point) -> np.ndarray:
        u, v, w = self._uvw(point)
        return np.array(self.grad_fn(self.data, u, v, w, np.zeros(_SCRATCH)))


def mfa_source(model: MfaModel) -> SampleSource:
    value_fn, grad_fn = _mfa_fns(model.degrees)
    return SampleSource("mfa", model.domain_bounds, model.value_range, value_fn, grad_fn, model.kernel_data())


def filter_source(grid: ScalarGrid, kind) -> SampleSource:
    kind = FilterKind.parse(kind)
    scale = (np.array(grid.dims) - 1) / (grid.bounds[1] - grid.bounds[0])
    if kind is FilterKind.TRILINEAR:
        fns = (_trilinear_value, _trilinear_grad)
        data = (grid.values, scale)
    elif kind is FilterKind.CATMULL_ROM:
        fns = (_catmull_rom_value, _catmull_rom_grad)
        data = (grid.values, scale)
    else:
        fns = (_tricubic_value, _tricubic_grad)
        data = (grid.values, scale, _TRICUBIC_PTR, _TRICUBIC_IDX, _TRICUBIC_VAL)
    return SampleSource(kind.value, grid.bounds, grid.value_range, fns[0], fns[1], data)


def analytic_source(spec, bounds=DEFAULT_BOUNDS, value_range=None) -> SampleSource:
    """Exact values and gradients of an analytic field (the ground truth)."""
    b = as_bounds(bounds)
    kind, params = spec.kernel_params()
    if value_range is None:
        value_range = (0.0, 1.0) if spec.kind == "marschner_lobb" else (
            float(params[:, 4].min()),
            float(params[:, 5].max()),
        )
    return SampleSource(
        f"analytic:{spec.kind}", b, tuple(value_range), _analytic_value, _analytic_grad,
        (kind, params, b[0].copy(), b[1] - b[0]),
    )


_COUNTING_CACHE = {}


def _counting_fns(value_fn, grad_fn):
    key = (value_fn, grad_fn)
    if key not in _COUNTING_CACHE:

        @nb.njit(nogil=True, inline="always")
        def counted_value(data, u, v, w, scratch):
            data[1][0] += 1
            return value_fn(data[0], u, v, w, scratch)

        @nb.njit(nogil=True, inline="always")
        def counted_grad(data, u, v, w, scratch):
            data[1][1] += 1
            return grad_fn(data[0], u, v, w, scratch)

        _COUNTING_CACHE[key] = (counted_value, counted_grad)
    return _COUNTING_CACHE[key]


class CountingSource(SampleSource):
    """Wrap a source and count value and gradient queries.

    Counts are exact for single-worker renders.
    """

    def __init__(self, inner: SampleSource):
        counts = np.zeros(2, dtype=np.int64)
        vf, gf = _counting_fns(inner.value_fn, inner.grad_fn)
        super().__init__(f"counting:{inner.name}", inner.bounds, inner.value_range, vf, gf, (inner.data, counts))
        object.__setattr__(self, "counts", counts)

    @property
    def value_queries(self) -> int:
        return int(self.counts[0])

    @property
    def gradient_queries(self) -> int:
        return int(self.counts[1])

    def reset(self) -> None:
        self.counts[:] = 0


# --------------------------------------------------------------------------
# ray geometry, shading, compositing
# --------------------------------------------------------------------------


@nb.njit(cache=True, nogil=True)
def _ray(cam, width, height, px, py):
    sx = ((px + 0.5) / width * 2.0 - 1.0) * cam[13]
    sy = 1.0 - (py + 0.5) / height * 2.0
    s = cam[12]
    if cam[14] > 0.5:
        dx = cam[3] + s * (sx * cam[6] + sy * cam[9])
        dy = cam[4] + s * (sx * cam[7] + sy * cam[10])
        dz = cam[5] + s * (sx * cam[8] + sy * cam[11])
        n = math.sqrt(dx * dx + dy * dy + dz * dz)
        return cam[0], cam[1], cam[2], dx / n, dy / n, dz / n
    ox = cam[0] + s * (sx * cam[6] + sy * cam[9])
    oy = cam[1] + s * (sx * cam[7] + sy * cam[10])
    oz = cam[2] + s * (sx * cam[8] + sy * cam[11])
    return ox, oy, oz, cam[3], cam[4], cam[5]


@nb.njit(cache=True, nogil=True)
def _clip(ox, oy, oz, dx, dy, dz, lo, hi):
    t_in = -np.inf
    t_out = np.inf
    o = (ox, oy, oz)
    d = (dx, dy, dz)
    for a in range(3):
        if d[a] == 0.0:
            if o[a] < lo[a] or o[a] > hi[a]:
                return False, 0.0, 0.0
            continue
        t1 = (lo[a] - o[a]) / d[a]
        t2 = (hi[a] - o[a]) / d[a]
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > t_in:
            t_in = t1
        if t2 < t_out:
            t_out = t2
    if t_out < max(t_in, 0.0):
        return False, t_in, t_out
    return True, t_in, t_out


@nb.njit(cache=True, nogil=True)
def _shade(col, gx, gy, gz, dx, dy, dz, sp):
    gn = math.sqrt(gx * gx + gy * gy + gz * gz)
    if gn == 0.0 or not math.isfinite(gn):
        for c in range(3):
            col[c] = min(max(sp[4 + c] * col[c], 0.0), 1.0)
        return
    nx = -gx / gn
    ny = -gy / gn
    nz = -gz / gn
    if sp[3] > 0.5:
        lx, ly, lz = -dx, -dy, -dz
    else:
        lx, ly, lz = sp[0], sp[1], sp[2]
    ndl = nx * lx + ny * ly + nz * lz
    diff = max(ndl, 0.0)
    spec = 0.0
    if ndl > 0.0:
        rx = 2.0 * ndl * nx - lx
        ry = 2.0 * ndl * ny - ly
        rz = 2.0 * ndl * nz - lz
        rv = -(rx * dx + ry * dy + rz * dz)
        if rv > 0.0:
            spec = rv ** sp[13]
    for c in range(3):
        x = sp[4 + c] * col[c] + sp[7 + c] * diff * col[c] + sp[10 + c] * spec
        col[c] = min(max(x, 0.0), 1.0)


@nb.njit(cache=True, nogil=True)
def _quantize(x):
    q = math.floor(x * 255.0 + 0.5)
    if q < 0.0:
        return 0
    if q > 255.0:
        return 255
    return int(q)


_MARCHERS: dict = {}


def _marcher(vfn, gfn):
    """Ray-march kernel compiled for one (value source, gradient source) pair.

    The source functions are captured as constants so numba inlines them
    into the sampling loop.
    """
    key = (vfn, gfn)
    if key in _MARCHERS:
        return _MARCHERS[key]

    @nb.njit(nogil=True)
    def march_rows(
        row0, row1, vdata, gdata, cam, width, height, lo, hi, step_len, ref_step,
        op_xs, op_ys, col_xs, col_ys, shading, correction, sp, o_max, bg, out, err, stats, trace_at, trace,
    ):
        scratch = np.zeros(_SCRATCH)
        gscratch = np.zeros(_SCRATCH)
        col = np.empty(3)
        inv0 = 1.0 / (hi[0] - lo[0])
        inv1 = 1.0 / (hi[1] - lo[1])
        inv2 = 1.0 / (hi[2] - lo[2])
        for py in range(row0, row1):
            for px in range(width):
                ox, oy, oz, dx, dy, dz = _ray(cam, width, height, px, py)
                hit, t0, t1 = _clip(ox, oy, oz, dx, dy, dz, lo, hi)
                tracing = px == trace_at[0] and py == trace_at[1]
                cr = 0.0
                cg = 0.0
                cb = 0.0
                acc = 0.0
                if hit:
                    ts = max(t0, 0.0)
                    n = int(math.floor((t1 - ts) / step_len)) + 1
                    for s in range(n):
                        t = ts + s * step_len
                        u = min(max((ox + t * dx - lo[0]) * inv0, 0.0), 1.0)
                        v = min(max((oy + t * dy - lo[1]) * inv1, 0.0), 1.0)
                        w = min(max((oz + t * dz - lo[2]) * inv2, 0.0), 1.0)
                        val = vfn(vdata, u, v, w, scratch)
                        stats[0] += 1
                        if not math.isfinite(val):
                            err[0] = 1
                            err[1] = px
                            err[2] = py
                            stats[3] = t
                            return
                        a = tf_scalar(op_xs, op_ys, val)
                        if correction and a > 0.0:
                            a = 1.0 - (1.0 - a) ** (step_len / ref_step)
                        if a > 0.0:
                            col[0], col[1], col[2] = tf_rgb(col_xs, col_ys, val)
                            if shading:
                                gx, gy, gz = gfn(gdata, u, v, w, gscratch)
                                if not (math.isfinite(gx) and math.isfinite(gy) and math.isfinite(gz)):
                                    err[0] = 2
                                    err[1] = px
                                    err[2] = py
                                    stats[3] = t
                                    return
                                _shade(col, gx, gy, gz, dx, dy, dz, sp)
                            f = (1.0 - acc) * a
                            cr += f * col[0]
                            cg += f * col[1]
                            cb += f * col[2]
                            new = acc + f
                            if new < acc or new > 1.0:
                                stats[1] += 1
                            acc = new
                        if tracing and s < trace.shape[0]:
                            trace[s, 0] = t
                            trace[s, 1] = val
                            trace[s, 2] = acc
                            stats[2] = s + 1
                        if acc > o_max:
                            break
                rest = (1.0 - acc) * bg[3]
                out[py, px, 0] = _quantize(cr + rest * bg[0])
                out[py, px, 1] = _quantize(cg + rest * bg[1])
                out[py, px, 2] = _quantize(cb + rest * bg[2])
                out[py, px, 3] = _quantize(acc + rest)

    _MARCHERS[key] = march_rows
    return march_rows


@dataclass
class RenderResult:
    image: ImageRGBA
    samples: int
    opacity_violations: int
    trace: np.ndarray | None = None


def render_detailed(
    source: SampleSource,
    cfg: RenderConfig,
    gradient_source: SampleSource | None = None,
    workers: int = 1,
    trace_pixel=None,
    max_trace: int = 100_000,
) -> RenderResult:
    """Render and also report sample counts and opacity-monotonicity checks.

    ``gradient_source`` supplies gradients for shading in place of
    ``source`` (values still come from ``source``).  ``trace_pixel``
    records ``(t, value, accumulated opacity)`` at every sample of one ray.
    """
    gsrc = source if gradient_source is None else gradient_source
    if not np.array_equal(source.bounds, gsrc.bounds):
        raise ConfigError("value and gradient sources cover different bounds")
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    cam = cfg.camera
    lo = np.ascontiguousarray(source.bounds[0])
    hi = np.ascontiguousarray(source.bounds[1])
    diag = float(np.linalg.norm(hi - lo))
    step_len = cfg.step * diag
    out = np.zeros((cam.height, cam.width, 4), dtype=np.uint8)
    trace_at = np.array([-1, -1], dtype=np.int64) if trace_pixel is None else np.array(trace_pixel, dtype=np.int64)
    trace = np.zeros((max_trace if trace_pixel is not None else 1, 3))
    camp = cam.kernel_params()
    sp = cfg.shading_params()
    bg = np.array(cfg.background)

    march = _marcher(source.value_fn, gsrc.grad_fn)

    def run(block):
        r0, r1 = block
        err = np.zeros(3, dtype=np.int64)
        stats = np.zeros(4)
        march(
            r0, r1, source.data, gsrc.data, camp, cam.width, cam.height,
            lo, hi, step_len, diag / 1000.0, cfg.opacity_tf.xs, cfg.opacity_tf.ys, cfg.color_tf.xs,
            cfg.color_tf.ys, cfg.shading, cfg.opacity_correction, sp, cfg.o_max, bg, out, err, stats,
            trace_at, trace,
        )
        return err, stats

    h = cam.height
    n = min(workers, h)
    blocks = [(i * h // n, (i + 1) * h // n) for i in range(n)]
    if n == 1:
        results = [run(blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(run, blocks))
    for err, stats in results:
        if err[0]:
            what = "value" if err[0] == 1 else "gradient"
            raise RenderError(f"{what} query on source {source.name!r} returned a non-finite result",
                              pixel=(int(err[1]), int(err[2])), t=float(stats[3]))
    samples = int(sum(s[0] for _, s in results))
    violations = int(sum(s[1] for _, s in results))
    tr = None
    if trace_pixel is not None:
        count = int(sum(s[2] for _, s in results))
        tr = trace[:count].copy()
    return RenderResult(ImageRGBA(cam.width, cam.height, out), samples, violations, tr)


def render(source: SampleSource, cfg: RenderConfig, gradient_source=None, workers: int = 1) -> ImageRGBA:
    return render_detailed(source, cfg, gradient_source, workers).image


def trace_ray(source: SampleSource, cfg: RenderConfig, px: int, py: int, gradient_source=None) -> np.ndarray:
    """Samples of one ray as rows ``(t, value, accumulated opacity)``."""
    one = cfg.with_camera()
    return render_detailed(source, one, gradient_source, trace_pixel=(px, py)).trace


# --------------------------------------------------------------------------
# python-level helpers sharing the compiled code
# --------------------------------------------------------------------------


def generate_ray(cam: Camera, px: int, py: int):
    """``(origin, unit direction)`` of the ray through the center of pixel (px, py)."""
    if not (0 <= px < cam.width and 0 <= py < cam.height):
        raise ConfigError(f"pixel ({px}, {py}) outside {cam.width}x{cam.height} image")
    r = _ray(cam.kernel_params(), cam.width, cam.height, px, py)
    return np.array(r[:3]), np.array(r[3:])


def ray_box_clip(origin, direction, bounds):
    """Slab clip: ``(t_in, t_out)`` or ``None`` for a miss."""
    b = as_bounds(bounds)
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    hit, t0, t1 = _clip(o[0], o[1], o[2], d[0], d[1], d[2], b[0], b[1])
    return (float(t0), float(t1)) if hit else None


def composite_step(acc, sample):
    """One front-to-back step: ``acc=(rgb, A)``, ``sample=(rgb, a)``."""
    (c, A), (cs, a) = acc, sample
    f = (1.0 - A) * a
    return np.asarray(c, dtype=np.float64) + f * np.asarray(cs, dtype=np.float64), A + f


def shade(color, gradient, view_dir, cfg: RenderConfig) -> np.ndarray:
    col = np.array(color, dtype=np.float64)
    g = np.asarray(gradient, dtype=np.float64)
    d = _unit(view_dir)
    _shade(col, g[0], g[1], g[2], d[0], d[1], d[2], cfg.shading_params())
    return col


# --------------------------------------------------------------------------
# bindings and presets
# --------------------------------------------------------------------------


def render_ground_truth(spec, cfg: RenderConfig, bounds=DEFAULT_BOUNDS, workers=1) -> ImageRGBA:
    return render(analytic_source(spec, bounds), cfg, workers=workers)


def render_mfa(model: MfaModel, cfg: RenderConfig, workers=1, values_from=None) -> ImageRGBA:
    """Render a model; ``values_from`` swaps in another value source (gradient isolation)."""
    src = mfa_source(model)
    if values_from is None:
        return render(src, cfg, workers=workers)
    return render(values_from, cfg, gradient_source=src, workers=workers)


def render_filter(grid: ScalarGrid, kind, cfg: RenderConfig, workers=1, values_from=None) -> ImageRGBA:
    src = filter_source(grid, kind)
    if values_from is None:
        return render(src, cfg, workers=workers)
    return render(values_from, cfg, gradient_source=src, workers=workers)


def value_study_config(camera: Camera, v_min=0.0, v_max=255.0, a_max=0.02, **kw) -> RenderConfig:
    """Value-accuracy setup: ramp opacity over the value range, constant red, no shading."""
    return RenderConfig(camera, ramp(v_min, v_max, a_max), constant_color((1.0, 0.0, 0.0)), shading=False, **kw)


def gradient_study_config(camera: Camera, threshold=0.5, opacity=1.0, **kw) -> RenderConfig:
    """Gradient-accuracy setup: step opacity, constant white, shading on."""
    return RenderConfig(camera, step(threshold, opacity), constant_color((1.0, 1.0, 1.0)), shading=True, **kw)
