import numpy as np
import pytest

from mfadvr.bspline import KnotVector, collocation_matrix
from mfadvr.data import PointCloud, ScalarGrid
from mfadvr.encoder import (
    EncodeConfig,
    adaptive_encode,
    encode,
    fit_curve_ls,
    fit_grid_separable,
    fit_scattered_global,
    initial_knots,
    parameterize_grid,
    runge_risk,
)
from mfadvr.errors import ConfigError, FitError
from mfadvr.fields import GaussianBeam, sample_grid
from mfadvr.model import eval_grid, eval_points

UNIT = [[0, 0, 0], [1, 1, 1]]


def grid_from(f, dims, bounds=UNIT):
    b = np.asarray(bounds, dtype=float)
    axes = [np.linspace(b[0, d], b[1, d], dims[d]) for d in range(3)]
    x, y, z = np.meshgrid(*axes, indexing="ij")
    return ScalarGrid(dims, b, f(x, y, z))


def test_parameterize_grid():
    g = grid_from(lambda x, y, z: x, (5, 2, 3))
    u, v, w = parameterize_grid(g)
    np.testing.assert_array_equal(u, [0, 0.25, 0.5, 0.75, 1])
    for t in (u, v, w):
        assert t[0] == 0 and t[-1] == 1 and np.all(np.diff(t) > 0)


def test_initial_knots():
    np.testing.assert_array_equal(initial_knots(np.linspace(0, 1, 7), 2, 3).knots, [0, 0, 0, 1, 1, 1])
    # averaging rule by hand: representatives (0, 0.5, 1), one interior knot = 0.5
    np.testing.assert_allclose(initial_knots(np.linspace(0, 1, 5), 1, 3).knots, [0, 0, 0.5, 1, 1], atol=1e-15)
    with pytest.raises(ConfigError):
        initial_knots(np.linspace(0, 1, 5), 3, 3)
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(3, 40))
        p = int(rng.integers(1, 5))
        params = np.sort(rng.random(n))
        params[0], params[-1] = 0, 1
        initial_knots(params, p, int(rng.integers(p + 1, n + 1)))


def test_fit_curve_examples():
    t = np.linspace(0, 1, 20)
    kv = initial_knots(t, 3, 7)
    np.testing.assert_allclose(fit_curve_ls(t, np.full(20, 4.0), kv), 4.0, atol=1e-12)
    c = fit_curve_ls(t, t, kv)
    assert np.abs(collocation_matrix(kv, t) @ c - t).max() <= 1e-9
    # square system interpolates
    rng = np.random.default_rng(1)
    t5 = np.linspace(0, 1, 5)
    v5 = rng.normal(size=5)
    kv5 = initial_knots(t5, 2, 5)
    c5 = fit_curve_ls(t5, v5, kv5)
    np.testing.assert_allclose(collocation_matrix(kv5, t5) @ c5, v5, atol=1e-9)
    np.testing.assert_allclose(c5, np.linalg.solve(collocation_matrix(kv5, t5), v5), atol=1e-9)


def test_fit_curve_least_squares_minimizer():
    rng = np.random.default_rng(2)
    t = np.sort(rng.random(60))
    t[0], t[-1] = 0, 1
    v = np.sin(6 * t) + 0.1 * rng.normal(size=60)
    kv = initial_knots(t, 3, 10)
    c = fit_curve_ls(t, v, kv)
    N = collocation_matrix(kv, t)
    # endpoint-constrained least squares oracle: fix c0, c_last, solve the rest
    c0, cl = v[0], v[-1]
    rhs = v - N[:, 0] * c0 - N[:, -1] * cl
    inner = np.linalg.lstsq(N[:, 1:-1], rhs, rcond=None)[0]
    np.testing.assert_allclose(c, np.concatenate([[c0], inner, [cl]]), atol=1e-8)


def test_fit_curve_empty_span_names_it():
    t = np.concatenate([np.linspace(0, 0.3, 10), [1.0]])
    kv = KnotVector(1, [0, 0, 0.4, 0.6, 0.8, 1, 1])
    with pytest.raises(FitError, match="span"):
        fit_curve_ls(t, t, kv)


def test_constant_grid():
    g = grid_from(lambda x, y, z: 0 * x + 3.0, (6, 6, 6))
    m = fit_grid_separable(g, EncodeConfig(2, 3))
    np.testing.assert_allclose(m.ctrl, 3.0, atol=1e-12)
    model, report = encode(g, EncodeConfig(2, 3))
    assert report.final_error == 0.0


def test_trilinear_field_exact():
    f = lambda x, y, z: x + 2 * y + 3 * z
    g = grid_from(f, (7, 6, 5))
    m = fit_grid_separable(g, EncodeConfig(2, (7, 6, 5)))
    vals = eval_grid(m, *parameterize_grid(g))
    assert np.abs(vals - g.values).max() / 6.0 <= 1e-9


def test_beam_regression_pin():
    g = sample_grid(GaussianBeam(), (64, 64, 64))
    m = fit_grid_separable(g, EncodeConfig(2, 32))
    err = np.abs(eval_grid(m, *parameterize_grid(g)) - g.values).max() / 255.0
    assert err < 0.05


def test_value_range_bookkeeping():
    rng = np.random.default_rng(3)
    g = ScalarGrid((5, 6, 7), UNIT, rng.normal(size=(5, 6, 7)))
    m = fit_grid_separable(g, EncodeConfig(2, 4))
    assert m.value_range == (g.values.min(), g.values.max())


def test_separable_equals_global_for_polynomials():
    f = lambda x, y, z: x * x - y * z + 0.5 * z
    g = grid_from(f, (8, 8, 8))
    cfg = EncodeConfig(2, 5)
    m = fit_grid_separable(g, cfg)
    pc = g.to_point_cloud()
    mg = fit_scattered_global(pc, cfg, g.bounds, knot_vectors=m.knot_vectors)
    np.testing.assert_allclose(mg.ctrl, m.ctrl, atol=1e-8)


def test_determinism():
    g = sample_grid(GaussianBeam(), (12, 12, 12))
    a = fit_grid_separable(g, EncodeConfig(3, 8))
    b = fit_grid_separable(g, EncodeConfig(3, 8))
    assert a == b and np.array_equal(a.ctrl, b.ctrl)


def test_scattered_examples():
    corners = np.array(list(np.ndindex(2, 2, 2)), dtype=float)
    m = fit_scattered_global(PointCloud(corners, np.full(8, 2.5)), EncodeConfig(1, 2), UNIT)
    np.testing.assert_allclose(m.ctrl, 2.5, atol=1e-9)

    rng = np.random.default_rng(4)
    pts = rng.random((5000, 3))
    m = fit_scattered_global(PointCloud(pts, pts[:, 0]), EncodeConfig(1, 4), UNIT)
    held = rng.random((100, 3))
    assert np.abs(eval_points(m, held) - held[:, 0]).max() <= 1e-6


def test_scattered_dead_controls():
    rng = np.random.default_rng(5)
    pts = rng.uniform(0, 0.45, (2000, 3))
    with pytest.raises(FitError, match="dead"):
        fit_scattered_global(PointCloud(pts, pts[:, 0]), EncodeConfig(2, 8), UNIT)


def test_adaptive_constant_converges_immediately():
    g = grid_from(lambda x, y, z: 0 * x + 1.0, (8, 8, 8))
    _, report = adaptive_encode(g, EncodeConfig(2, 3, adaptive=True))
    assert report.converged and len(report.rounds) == 1 and report.total_splits == 0


def test_adaptive_step_like_grid():
    g = grid_from(lambda x, y, z: np.tanh(40 * (x - 0.43)) + 0 * y, (64, 6, 6))
    _, report = adaptive_encode(g, EncodeConfig(2, (4, 3, 3), adaptive=True, e_max=0.05, max_rounds=12))
    errs = [r.max_error for r in report.rounds]
    assert all(b <= a + 1e-10 for a, b in zip(errs, errs[1:]))
    assert report.final_error <= 0.05 or not report.converged
    assert report.stop_reason


def test_adaptive_vacuous_tolerance():
    g = sample_grid(GaussianBeam(), (16, 16, 16))
    _, report = adaptive_encode(g, EncodeConfig(2, 4, adaptive=True, e_max=1.0))
    assert report.total_splits == 0 and report.converged


def test_adaptive_caps_reported():
    g = sample_grid(GaussianBeam(sigma=0.05), (24, 24, 24))
    _, report = adaptive_encode(g, EncodeConfig(2, 4, adaptive=True, e_max=1e-6, max_rounds=2))
    assert not report.converged
    assert "not-converged" in report.lines()[-1]


def test_config_validation():
    with pytest.raises(ConfigError):
        EncodeConfig(3, 3)
    with pytest.raises(ConfigError):
        EncodeConfig(0, 3)
    with pytest.raises(ConfigError):
        EncodeConfig(2, 4, e_max=0)
    assert EncodeConfig(2, 5).nctrl == (5, 5, 5)


def test_runge_risk_rule():
    assert runge_risk((64, 64, 64), (64, 64, 64), (4, 4, 4))
    assert runge_risk((58, 20, 20), (64, 64, 64), (3, 3, 3))
    assert not runge_risk((64, 64, 64), (64, 64, 64), (2, 2, 2))
    assert not runge_risk((32, 32, 32), (64, 64, 64), (4, 4, 4))
