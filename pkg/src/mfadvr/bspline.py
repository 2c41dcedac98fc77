"""Clamped B-spline bases: knot vectors, span search, basis values and slopes.

The ``*_kernel`` functions are Numba-compiled and write into caller-provided
scratch arrays so they can run inside the ray-marching loop without
allocating.  The public wrappers validate their inputs and allocate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import ConfigError, DomainError, MfaError, UnsupportedOrderError

__all__ = [
    "KnotVector",
    "find_span",
    "basis_funs",
    "basis_derivs",
    "collocation_matrix",
]


@dataclass(frozen=True, eq=False)
class KnotVector:
    """Clamped knot vector on [0, 1] for a B-spline basis of a given degree.

    The number of basis functions (control values) is ``len(knots) - degree - 1``.
    """

    degree: int
    knots: np.ndarray

    def __post_init__(self):
        knots = np.ascontiguousarray(self.knots, dtype=np.float64)
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        problem = validate_knots(knots, self.degree)
        if problem:
            raise ConfigError(problem)

    @property
    def n_ctrl(self) -> int:
        return len(self.knots) - self.degree - 1

    @property
    def last_span(self) -> int:
        return len(self.knots) - self.degree - 2

    def spans(self) -> list[tuple[int, float, float]]:
        """Non-degenerate spans as ``(index, start, end)``."""
        k = self.knots
        return [(i, k[i], k[i + 1]) for i in range(self.degree, self.last_span + 1) if k[i] < k[i + 1]]

    def __eq__(self, other):
        if not isinstance(other, KnotVector):
            return NotImplemented
        return self.degree == other.degree and np.array_equal(self.knots, other.knots)

    def __repr__(self):
        return f"KnotVector(degree={self.degree}, knots={self.knots.tolist()})"


def validate_knots(knots: np.ndarray, degree: int) -> str | None:
    """Return a description of the first violated invariant, or None."""
    if degree < 0:
        return f"degree must be nonnegative, got {degree}"
    if knots.ndim != 1:
        return "knots must be one-dimensional"
    if len(knots) < 2 * degree + 2:
        return f"need at least {2 * degree + 2} knots for degree {degree}, got {len(knots)}"
    if not np.all(np.isfinite(knots)):
        return "knots must be finite"
    if np.any(np.diff(knots) < 0):
        bad = int(np.argmax(np.diff(knots) < 0))
        return f"knots must be nondecreasing (knots[{bad}]={knots[bad]} > knots[{bad + 1}]={knots[bad + 1]})"
    if np.any(knots[: degree + 1] != 0.0) or np.any(knots[-degree - 1 :] != 1.0):
        return "knot vector must be clamped to [0, 1] with end multiplicity degree+1"
    interior = knots[degree + 1 : len(knots) - degree - 1]
    if interior.size:
        _, counts = np.unique(interior, return_counts=True)
        if counts.max() > degree:
            return f"interior knot multiplicity {counts.max()} exceeds degree {degree}"
        if interior[0] <= 0.0 or interior[-1] >= 1.0:
            return "interior knots must lie strictly inside (0, 1)"
    return None


# --------------------------------------------------------------------------
# compiled kernels
# --------------------------------------------------------------------------


@nb.njit(cache=True, nogil=True)
def find_span_kernel(knots, p, u):
    n = knots.shape[0] - p - 2
    if u >= knots[n + 1]:
        return n
    if u <= knots[p]:
        # skip any zero-length spans at the clamped start (none for valid vectors)
        lo = p
        while knots[lo + 1] <= u:
            lo += 1
        return lo
    low = p
    high = n + 1
    mid = (low + high) // 2
    while u < knots[mid] or u >= knots[mid + 1]:
        if u < knots[mid]:
            high = mid
        else:
            low = mid
        mid = (low + high) // 2
    return mid


@nb.njit(cache=True, nogil=True)
def basis_funs_kernel(knots, span, u, p, s, o):
    """Basis values into ``s[o:o+p+1]``; uses ``s[o+p+1:o+3p+3]`` as workspace."""
    m = p + 1
    lf = o + m
    rt = o + 2 * m
    s[o] = 1.0
    for j in range(1, m):
        s[lf + j] = u - knots[span + 1 - j]
        s[rt + j] = knots[span + j] - u
        saved = 0.0
        for r in range(j):
            temp = s[o + r] / (s[rt + r + 1] + s[lf + j - r])
            s[o + r] = saved + s[rt + r + 1] * temp
            saved = s[lf + j - r] * temp
        s[o + j] = saved


@nb.njit(cache=True, nogil=True)
def basis_derivs_kernel(knots, span, u, p, s, o):
    """Values into ``s[o:o+m]`` and first derivatives into ``s[o+m:o+2m]``, m = p+1.

    Workspace: ``s[o+2m:o+4m+m*m]``.
    """
    m = p + 1
    lf = o + 2 * m
    rt = o + 3 * m
    nd = o + 4 * m
    # triangular table: ndu[r, j] basis of degree j, ndu[j, r] knot differences
    s[nd] = 1.0
    for j in range(1, m):
        s[lf + j] = u - knots[span + 1 - j]
        s[rt + j] = knots[span + j] - u
        saved = 0.0
        for r in range(j):
            s[nd + j * m + r] = s[rt + r + 1] + s[lf + j - r]
            temp = s[nd + r * m + j - 1] / s[nd + j * m + r]
            s[nd + r * m + j] = saved + s[rt + r + 1] * temp
            saved = s[lf + j - r] * temp
        s[nd + j * m + j] = saved
    for r in range(m):
        s[o + r] = s[nd + r * m + p]
        d = 0.0
        if p > 0:
            if r >= 1:
                d += s[nd + (r - 1) * m + p - 1] / s[nd + p * m + r - 1]
            if r <= p - 1:
                d -= s[nd + r * m + p - 1] / s[nd + p * m + r]
        s[o + m + r] = p * d


def basis_block(p: int) -> int:
    """Scratch length needed by ``basis_derivs_kernel`` (enough for values too)."""
    return 4 * (p + 1) + (p + 1) ** 2


def span_table(kv: KnotVector, buckets: int | None = None) -> np.ndarray:
    """Span containing the left end of each of ``buckets`` equal parameter bins.

    A query at ``u`` starts from its bin's entry and steps right past knots
    ``<= u``, which gives the same span as :func:`find_span` without a search.
    """
    if buckets is None:
        buckets = 4 * kv.n_ctrl
    edges = np.arange(buckets, dtype=np.float64) / buckets
    return np.array([find_span_kernel(kv.knots, kv.degree, e) for e in edges], dtype=np.int64)


def span_polynomials(kv: KnotVector) -> tuple[np.ndarray, np.ndarray]:
    """Power-form coefficients of the active basis functions on every span.

    Returns ``(coef, inv_width)``.  On span ``s`` with local coordinate
    ``t = (u - knots[s]) * inv_width[s - p]`` in [0, 1],
    ``N_{s-p+r}(u) = sum_k coef[s - p, r, k] * t**k``.  Zero-length spans get
    zero rows.  The recursion is Cox-de Boor carried out on polynomials in ``t``.
    """
    k, p = kv.knots, kv.degree
    nspan = kv.n_ctrl - p
    coef = np.zeros((nspan, p + 1, p + 1))
    inv_width = np.zeros(nspan)
    for s in range(p, p + nspan):
        h = k[s + 1] - k[s]
        if h <= 0:
            continue
        inv_width[s - p] = 1.0 / h
        polys = {s: np.array([1.0])}
        for d in range(1, p + 1):
            nxt = {}
            for i in range(s - d, s + 1):
                acc = np.zeros(d + 1)
                if i in polys and k[i + d] > k[i]:
                    # (u - k_i) / (k_{i+d} - k_i) in terms of t
                    term = np.convolve(polys[i], [k[s] - k[i], h]) / (k[i + d] - k[i])
                    acc[: term.size] += term
                if i + 1 in polys and k[i + d + 1] > k[i + 1]:
                    term = np.convolve(polys[i + 1], [k[i + d + 1] - k[s], -h]) / (k[i + d + 1] - k[i + 1])
                    acc[: term.size] += term
                nxt[i] = acc
            polys = nxt
        for r in range(p + 1):
            coef[s - p, r] = polys[s - p + r]
    return coef, inv_width


@nb.njit(cache=True)
def _collocation(knots, p, params, out):
    n = params.shape[0]
    s = np.empty(3 * (p + 1))
    for j in range(n):
        span = find_span_kernel(knots, p, params[j])
        basis_funs_kernel(knots, span, params[j], p, s, 0)
        for r in range(p + 1):
            out[j, span - p + r] = s[r]


# --------------------------------------------------------------------------
# public API
# --------------------------------------------------------------------------


def _check_param(u: float) -> float:
    u = float(u)
    if not (0.0 <= u <= 1.0):
        raise DomainError(f"parameter {u!r} outside [0, 1]")
    return u


def find_span(kv: KnotVector, u: float) -> int:
    """Index ``i`` with ``knots[i] <= u < knots[i+1]``; ``u == 1`` maps to the last span."""
    return int(find_span_kernel(kv.knots, kv.degree, _check_param(u)))


def _check_span(kv: KnotVector, span: int, u: float) -> None:
    k = kv.knots
    if not (kv.degree <= span <= kv.last_span):
        raise MfaError(f"span {span} outside [{kv.degree}, {kv.last_span}]")
    ok = k[span] <= u < k[span + 1] or (span == kv.last_span and u == k[span + 1])
    if not ok:
        raise MfaError(f"span {span} [{k[span]}, {k[span + 1]}) inconsistent with u={u}")


def basis_funs(kv: KnotVector, span: int, u: float) -> np.ndarray:
    """The ``p+1`` nonzero basis values N_{span-p..span}(u)."""
    u = _check_param(u)
    _check_span(kv, span, u)
    p = kv.degree
    s = np.empty(3 * (p + 1))
    basis_funs_kernel(kv.knots, span, u, p, s, 0)
    return s[: p + 1].copy()


def basis_derivs(kv: KnotVector, span: int, u: float, order: int = 1) -> np.ndarray:
    """First derivatives of the ``p+1`` active basis functions at ``u``.

    Only ``order=1`` is implemented; anything else raises
    :class:`UnsupportedOrderError`.
    """
    if order != 1:
        raise UnsupportedOrderError(f"only first derivatives are supported, got order={order}")
    u = _check_param(u)
    _check_span(kv, span, u)
    p = kv.degree
    s = np.empty(basis_block(p))
    basis_derivs_kernel(kv.knots, span, u, p, s, 0)
    return s[p + 1 : 2 * p + 2].copy()


def collocation_matrix(kv: KnotVector, params) -> np.ndarray:
    """Dense ``len(params) x n_ctrl`` matrix of basis values at ``params``."""
    params = np.ascontiguousarray(params, dtype=np.float64)
    if params.size and (params.min() < 0.0 or params.max() > 1.0):
        raise DomainError("parameters must lie in [0, 1]")
    out = np.zeros((params.shape[0], kv.n_ctrl))
    _collocation(kv.knots, kv.degree, params, out)
    return out
