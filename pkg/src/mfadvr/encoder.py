"""Least-squares encoding of grids and point clouds into :class:`MfaModel`.

Structured grids are fitted one axis at a time: every grid line along an
axis shares the same parameters and knots, so each sweep is one normal
matrix factorization with many right-hand sides.  Scattered data go through
a single sparse global solve.  :func:`adaptive_encode` wraps the grid fit in
the error-driven knot refinement loop.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numba as nb
import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .bspline import KnotVector, basis_funs_kernel, collocation_matrix, find_span_kernel
from .data import PointCloud, ScalarGrid, as_bounds
from .errors import ConfigError, DomainError, FitError
from .model import MfaModel, eval_grid

__all__ = [
    "EncodeConfig",
    "RoundInfo",
    "RefinementReport",
    "parameterize_grid",
    "initial_knots",
    "uniform_knots",
    "fit_curve_ls",
    "fit_grid_separable",
    "fit_scattered_global",
    "adaptive_encode",
    "encode",
    "runge_risk",
    "RIDGE",
]

log = logging.getLogger(__name__)

RIDGE = 1e-12


def _triple(x, name) -> tuple:
    if np.ndim(x) == 0:
        return (int(x),) * 3
    t = tuple(int(v) for v in x)
    if len(t) == 1:
        return t * 3
    if len(t) != 3:
        raise ConfigError(f"{name} needs one or three values, got {len(t)}")
    return t


@dataclass(frozen=True)
class EncodeConfig:
    """Encoding parameters; scalars broadcast to all three axes.

    ``max_ctrl=None`` caps refinement at the grid resolution.
    """

    degree: tuple = (2, 2, 2)
    nctrl: tuple = (8, 8, 8)
    adaptive: bool = False
    e_max: float = 0.01
    max_rounds: int = 10
    max_ctrl: tuple | None = None

    def __post_init__(self):
        degree = _triple(self.degree, "degree")
        nctrl = _triple(self.nctrl, "nctrl")
        if min(degree) < 1:
            raise ConfigError(f"degree must be >= 1, got {degree}")
        for d in range(3):
            if nctrl[d] < degree[d] + 1:
                raise ConfigError(f"axis {d}: nctrl {nctrl[d]} < degree {degree[d]} + 1")
        if not 0.0 < self.e_max <= 1.0:
            raise ConfigError(f"e_max must be in (0, 1], got {self.e_max}")
        if self.max_rounds < 0:
            raise ConfigError("max_rounds must be nonnegative")
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "nctrl", nctrl)
        if self.max_ctrl is not None:
            object.__setattr__(self, "max_ctrl", _triple(self.max_ctrl, "max_ctrl"))


def runge_risk(nctrl, dims, degree) -> bool:
    """True when a near-interpolating control count meets a degree >= 3."""
    return any(n >= 0.9 * m and p >= 3 for n, m, p in zip(nctrl, dims, degree))


# --------------------------------------------------------------------------
# parameterization and knots
# --------------------------------------------------------------------------


def parameterize_grid(g: ScalarGrid) -> list[np.ndarray]:
    """Uniform parameters ``0, 1/(n-1), ..., 1`` along each grid axis."""
    return [np.linspace(0.0, 1.0, n) for n in g.dims]


def initial_knots(params, p: int, nctrl: int) -> KnotVector:
    """Clamped knots with interior knots from parameter averaging.

    The parameter sequence is first resampled to ``nctrl`` representative
    values; interior knot ``j`` is then the mean of ``p`` consecutive
    representatives.  With ``nctrl == len(params)`` this is the classic
    averaging rule for interpolation.
    """
    if nctrl < p + 1:
        raise ConfigError(f"nctrl {nctrl} < degree {p} + 1")
    params = np.asarray(params, dtype=np.float64)
    n_int = nctrl - p - 1
    interior = np.empty(n_int)
    if n_int:
        m = len(params)
        rep = np.interp(np.linspace(0.0, m - 1, nctrl), np.arange(m), params)
        for j in range(1, n_int + 1):
            interior[j - 1] = rep[j : j + p].mean()
        interior = _repair_interior(interior, p)
    knots = np.concatenate([np.zeros(p + 1), interior, np.ones(p + 1)])
    return KnotVector(p, knots)


def uniform_knots(p: int, nctrl: int) -> KnotVector:
    """Clamped knots with equally spaced interior knots."""
    if nctrl < p + 1:
        raise ConfigError(f"nctrl {nctrl} < degree {p} + 1")
    interior = np.linspace(0.0, 1.0, nctrl - p + 1)[1:-1]
    return KnotVector(p, np.concatenate([np.zeros(p + 1), interior, np.ones(p + 1)]))


def _repair_interior(interior, p):
    # clustered parameters can push averaged knots onto the ends or stack them
    eps = 1e-9
    interior = np.clip(interior, eps, 1.0 - eps)
    _, counts = np.unique(interior, return_counts=True)
    if counts.size and counts.max() > p:
        n = len(interior)
        interior = np.linspace(0.0, 1.0, n + 2)[1:-1]
    return interior


# --------------------------------------------------------------------------
# 1D least squares
# --------------------------------------------------------------------------


def _check_support(N: np.ndarray, params: np.ndarray, kv: KnotVector) -> None:
    """Schoenberg-Whitney check: each basis function needs its own sample."""
    order = np.argsort(params, kind="stable")
    Ns = N[order]
    j = 0
    m = len(params)
    for i in range(kv.n_ctrl):
        while j < m and Ns[j, i] == 0.0:
            j += 1
        if j == m:
            lo, hi = kv.knots[i], kv.knots[i + kv.degree + 1]
            t = params
            empty = [(a, b) for s, a, b in kv.spans() if lo <= a and b <= hi and not np.any((t >= a) & (t < b))]
            detail = ", ".join(f"[{a:.6g}, {b:.6g})" for a, b in empty) or f"support [{lo:.6g}, {hi:.6g}]"
            raise FitError(f"control {i} is underdetermined: too few samples in knot span(s) {detail}")
        j += 1


def _fit_lines(params: np.ndarray, kv: KnotVector, values: np.ndarray) -> np.ndarray:
    """Fit every column of ``values`` (samples x lines) to ``kv``.

    Samples at parameters 0 and 1 pin the first and last control values.
    Each line is fitted about its mean, so the ridge term pulls toward the
    mean rather than zero and constant lines come out exact.
    """
    params = np.asarray(params, dtype=np.float64)
    N = collocation_matrix(kv, params)
    _check_support(N, params, kv)
    n = kv.n_ctrl
    shift = values.mean(axis=0)
    values = values - shift
    ctrl = np.empty((n, values.shape[1]))
    at0 = np.flatnonzero(params == 0.0)
    at1 = np.flatnonzero(params == 1.0)
    if len(at0) and len(at1):
        ctrl[0] = values[at0[0]]
        ctrl[-1] = values[at1[0]]
        A = N[:, 1:-1]
        rhs = values - np.outer(N[:, 0], ctrl[0]) - np.outer(N[:, -1], ctrl[-1])
        cols = slice(1, n - 1)
    else:
        A = N
        rhs = values
        cols = slice(0, n)
    if A.shape[1]:
        normal = A.T @ A
        normal[np.diag_indices_from(normal)] += RIDGE
        ctrl[cols] = scipy.linalg.solve(normal, A.T @ rhs, assume_a="pos")
    ctrl += shift
    if not np.all(np.isfinite(ctrl)):
        raise FitError("least-squares solve produced non-finite control values")
    return ctrl


def fit_curve_ls(params, values, kv: KnotVector) -> np.ndarray:
    """Least-squares control values for one curve of (parameter, value) samples."""
    params = np.asarray(params, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if params.shape != values.shape or params.ndim != 1:
        raise ConfigError("params and values must be matching 1-D sequences")
    if len(params) < kv.n_ctrl:
        raise FitError(f"{len(params)} samples cannot determine {kv.n_ctrl} control values")
    if params.min() < 0.0 or params.max() > 1.0:
        raise DomainError("curve parameters must lie in [0, 1]")
    return _fit_lines(params, kv, values[:, None])[:, 0]


# --------------------------------------------------------------------------
# structured grids
# --------------------------------------------------------------------------


def _fit_axis(data: np.ndarray, axis: int, params, kv: KnotVector) -> np.ndarray:
    moved = np.moveaxis(data, axis, 0)
    shape = moved.shape
    flat = moved.reshape(shape[0], -1)
    fitted = _fit_lines(params, kv, flat)
    return np.moveaxis(fitted.reshape((kv.n_ctrl,) + shape[1:]), 0, axis)


def fit_grid_separable(g: ScalarGrid, cfg: EncodeConfig, knot_vectors=None) -> MfaModel:
    """Tensor-product fit by successive 1D least-squares sweeps along u, v, w.

    ``knot_vectors`` overrides the initial knot placement (used by the
    refinement loop).
    """
    params = parameterize_grid(g)
    if knot_vectors is None:
        knot_vectors = tuple(initial_knots(params[d], cfg.degree[d], cfg.nctrl[d]) for d in range(3))
    ctrl = g.values
    for d in range(3):
        try:
            ctrl = _fit_axis(ctrl, d, params[d], knot_vectors[d])
        except FitError as exc:
            raise FitError(f"axis {'uvw'[d]}: {exc}") from None
    return MfaModel(tuple(knot_vectors), ctrl, g.value_range, g.bounds)


def _relative_errors(model: MfaModel, g: ScalarGrid, params) -> np.ndarray:
    # residual of the mean-centered model: same function, less cancellation
    c = float(model.ctrl.mean())
    centered = MfaModel(model.knot_vectors, model.ctrl - c, (0.0, 0.0), model.domain_bounds)
    resid = eval_grid(centered, *params) - (g.values - c)
    lo, hi = g.value_range
    denom = hi - lo if hi > lo else 1.0
    return np.abs(resid) / denom


# --------------------------------------------------------------------------
# scattered data
# --------------------------------------------------------------------------


@nb.njit(cache=True)
def _scattered_rows(ku, kv, kw, pu, pv, pw, nv, nw, q, rows, cols, vals):
    b = 3 * (max(pu, pv, pw) + 1)
    s = np.empty(3 * b)
    e = 0
    for n in range(q.shape[0]):
        su = find_span_kernel(ku, pu, q[n, 0])
        sv = find_span_kernel(kv, pv, q[n, 1])
        sw = find_span_kernel(kw, pw, q[n, 2])
        basis_funs_kernel(ku, su, q[n, 0], pu, s, 0)
        basis_funs_kernel(kv, sv, q[n, 1], pv, s, b)
        basis_funs_kernel(kw, sw, q[n, 2], pw, s, 2 * b)
        for i in range(pu + 1):
            for j in range(pv + 1):
                for k in range(pw + 1):
                    rows[e] = n
                    cols[e] = ((su - pu + i) * nv + (sv - pv + j)) * nw + (sw - pw + k)
                    vals[e] = s[i] * s[b + j] * s[2 * b + k]
                    e += 1


def fit_scattered_global(pc: PointCloud, cfg: EncodeConfig, bounds=None, knot_vectors=None) -> MfaModel:
    """One global least-squares fit of a point cloud with tensor-product basis rows.

    Positions are normalized to the unit cube by ``bounds`` (default: the
    cloud's bounding box).  Knots default to uniform interior knots on each
    axis, so regions of the box without samples show up as dead controls.
    """
    b = as_bounds(pc.bounding_box() if bounds is None else bounds)
    pts = pc.points
    if np.any(pts < b[0]) or np.any(pts > b[1]):
        raise DomainError("point cloud extends outside the given bounds")
    q = np.clip((pts - b[0]) / (b[1] - b[0]), 0.0, 1.0)
    if knot_vectors is None:
        knot_vectors = tuple(uniform_knots(cfg.degree[d], cfg.nctrl[d]) for d in range(3))
    ku, kv, kw = (k.knots for k in knot_vectors)
    pu, pv, pw = (k.degree for k in knot_vectors)
    shape = tuple(k.n_ctrl for k in knot_vectors)
    ncoef = shape[0] * shape[1] * shape[2]
    nnz = len(q) * (pu + 1) * (pv + 1) * (pw + 1)
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    _scattered_rows(ku, kv, kw, pu, pv, pw, shape[1], shape[2], q, rows, cols, vals)
    A = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(len(q), ncoef))

    support = np.asarray(abs(A).sum(axis=0)).ravel()
    dead = np.flatnonzero(support == 0.0)
    if dead.size:
        idx = [tuple(int(i) for i in np.unravel_index(k, shape)) for k in dead]
        shown = ", ".join(map(str, idx[:10])) + (" ..." if len(idx) > 10 else "")
        raise FitError(f"{len(idx)} dead control point(s) with no sample support: {shown}")

    normal = (A.T @ A).tocsc() + RIDGE * scipy.sparse.identity(ncoef, format="csc")
    shift = float(pc.values.mean())
    rhs = A.T @ (pc.values - shift)
    ctrl = scipy.sparse.linalg.spsolve(normal, rhs) + shift
    if not np.all(np.isfinite(ctrl)):
        raise FitError("global least-squares solve produced non-finite control values")
    lo, hi = float(pc.values.min()), float(pc.values.max())
    return MfaModel(tuple(knot_vectors), ctrl.reshape(shape), (lo, hi), b)


# --------------------------------------------------------------------------
# adaptive refinement
# --------------------------------------------------------------------------


@dataclass
class RoundInfo:
    round: int
    nctrl: tuple
    spans: tuple
    max_error: float
    splits: tuple = (0, 0, 0)


@dataclass
class RefinementReport:
    rounds: list = field(default_factory=list)
    converged: bool = False
    stop_reason: str = ""
    e_max: float = 0.0

    @property
    def final_error(self) -> float:
        return self.rounds[-1].max_error if self.rounds else float("nan")

    @property
    def total_splits(self) -> int:
        return sum(sum(r.splits) for r in self.rounds)

    def lines(self) -> list[str]:
        out = []
        for r in self.rounds:
            out.append(
                f"round={r.round} nctrl={','.join(map(str, r.nctrl))} spans={','.join(map(str, r.spans))} "
                f"max_rel_error={r.max_error:.6e} splits={','.join(map(str, r.splits))}"
            )
        status = "converged" if self.converged else "not-converged"
        out.append(f"status={status} reason={self.stop_reason} final_max_rel_error={self.final_error:.6e}")
        return out


def _span_errors(kv: KnotVector, params, err_along):
    """Max error per non-degenerate span, keyed by span index."""
    spans = np.array([find_span_kernel(kv.knots, kv.degree, t) for t in params])
    out = {}
    for s in np.unique(spans):
        out[int(s)] = float(err_along[spans == s].max())
    return spans, out


def _split_axis(kv: KnotVector, params, err3d, axis, e_max, budget):
    other = tuple(a for a in range(3) if a != axis)
    err_along = err3d.max(axis=other)
    spans, per_span = _span_errors(kv, params, err_along)
    candidates = []
    for s, e in per_span.items():
        if e <= e_max:
            continue
        a, b = kv.knots[s], kv.knots[s + 1]
        mid = 0.5 * (a + b)
        inside = params[spans == s]
        if np.any(inside < mid) and np.any(inside >= mid):
            candidates.append((-e, s, mid))
    offending = sum(1 for e in per_span.values() if e > e_max)
    candidates.sort()
    chosen = sorted(mid for _, _, mid in candidates[: max(budget, 0)])
    return chosen, offending, len(candidates)


def adaptive_encode(g: ScalarGrid, cfg: EncodeConfig) -> tuple[MfaModel, RefinementReport]:
    """Fit, measure per-span error, split offending spans at midpoints, refit.

    Stops when every span is within ``cfg.e_max`` (relative to the input
    value range), after ``cfg.max_rounds`` refinements, or when no span can
    be split under the ``max_ctrl`` cap.  Caps are reported, not raised.
    """
    params = parameterize_grid(g)
    max_ctrl = cfg.max_ctrl if cfg.max_ctrl is not None else g.dims
    kvs = [initial_knots(params[d], cfg.degree[d], cfg.nctrl[d]) for d in range(3)]
    report = RefinementReport(e_max=cfg.e_max)
    rnd = 0
    while True:
        model = fit_grid_separable(g, cfg, tuple(kvs))
        err3d = _relative_errors(model, g, params)
        info = RoundInfo(rnd, model.nctrl, tuple(len(kv.spans()) for kv in kvs), float(err3d.max()))
        report.rounds.append(info)
        log.debug("refinement %s", info)
        if info.max_error <= cfg.e_max:
            report.converged = True
            report.stop_reason = "tolerance"
            break
        if rnd >= cfg.max_rounds:
            report.stop_reason = "max_rounds"
            break
        new_kvs = []
        splits = []
        capped = False
        for d in range(3):
            budget = max_ctrl[d] - kvs[d].n_ctrl
            chosen, _, splittable = _split_axis(kvs[d], params[d], err3d, d, cfg.e_max, budget)
            capped |= splittable > len(chosen)
            splits.append(len(chosen))
            if chosen:
                knots = np.sort(np.concatenate([kvs[d].knots, chosen]), kind="stable")
                new_kvs.append(KnotVector(kvs[d].degree, knots))
            else:
                new_kvs.append(kvs[d])
        info.splits = tuple(splits)
        if not any(splits):
            report.stop_reason = "max_ctrl" if capped else "unsplittable"
            break
        kvs = new_kvs
        rnd += 1
    return model, report


def encode(g: ScalarGrid, cfg: EncodeConfig) -> tuple[MfaModel, RefinementReport]:
    """Fit ``g`` with or without refinement; always returns a report."""
    if cfg.adaptive:
        return adaptive_encode(g, cfg)
    model = fit_grid_separable(g, cfg)
    err = _relative_errors(model, g, parameterize_grid(g))
    report = RefinementReport(e_max=cfg.e_max)
    report.rounds.append(RoundInfo(0, model.nctrl, tuple(len(kv.spans()) for kv in model.knot_vectors), float(err.max())))
    report.converged = report.rounds[0].max_error <= cfg.e_max
    report.stop_reason = "single-pass"
    return model, report
