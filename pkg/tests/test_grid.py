import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaugetomo import PolarGrid, matching_M1_grid
from gaugetomo import fields
from gaugetomo.grid import fd_weights


def smooth(x):
    return np.exp(-(x[:, 0] - 0.2) ** 2 - 2 * x[:, 1] ** 2) * np.cos(x[:, 0] + 0.5 * x[:, 1])


def smooth_grad(x):
    e = np.exp(-(x[:, 0] - 0.2) ** 2 - 2 * x[:, 1] ** 2)
    a = x[:, 0] + 0.5 * x[:, 1]
    gx = e * (-2 * (x[:, 0] - 0.2) * np.cos(a) - np.sin(a))
    gy = e * (-4 * x[:, 1] * np.cos(a) - 0.5 * np.sin(a))
    return gx, gy


def test_fd_weights_exact_on_polynomials():
    offs = np.arange(-2, 3)
    w = fd_weights(offs, 1)
    for p in range(5):
        assert abs(np.dot(w, offs.astype(float) ** p) - (p == 1)) < 1e-12


def test_area_and_boundary():
    g = PolarGrid(33, 32)
    assert abs(g.integrate(np.ones(g.size)) - np.pi) < 1e-12
    assert np.allclose(np.hypot(*g.points[g.boundary].T), 1.0)
    assert np.allclose(g.points[g.pole], 0.0)


def test_rejects_bad_sizes():
    with pytest.raises(ValueError):
        PolarGrid(5, 16)
    with pytest.raises(ValueError):
        PolarGrid(16, 15)


def _grad_error(n):
    g = PolarGrid(n, n - 1)
    u = smooth(g.points)
    gx, gy = smooth_grad(g.points)
    return max(np.max(np.abs(g.Dx @ u - gx)), np.max(np.abs(g.Dy @ u - gy)))


def test_gradient_fourth_order():
    # the largest error sits on the boundary ring with one-sided stencils
    e1, e2 = _grad_error(33), _grad_error(65)
    assert e2 < 2e-4
    assert e1 / e2 > 10.0


def test_interpolation_converges():
    rng = np.random.default_rng(0)
    r = np.sqrt(rng.uniform(0, 1, 200))
    t = rng.uniform(0, 2 * np.pi, 200)
    pts = np.stack([r * np.cos(t), r * np.sin(t)], axis=1)
    err = []
    for n in (17, 33):
        g = PolarGrid(n, n - 1)
        err.append(np.max(np.abs(g.interpolate(smooth(g.points), pts) - smooth(pts))))
    assert err[1] < 2e-4 and err[0] / err[1] > 8.0


def test_interpolation_zero_outside():
    g = PolarGrid(17, 16)
    assert g.interp_matrix(np.array([[1.05, 0.0]])).nnz == 0


@given(st.floats(0.0, 1.0), st.floats(0, 2 * np.pi))
def test_interpolation_reproduces_nodes_and_constants(r, t):
    g = PolarGrid(17, 16)
    pt = np.array([[r * np.cos(t), r * np.sin(t)]])
    assert abs(g.interpolate(np.ones(g.size), pt)[0] - 1.0) < 1e-12


def test_matching_grid_spacing():
    g = PolarGrid(33, 32)
    g1 = matching_M1_grid(g, 1.1)
    assert g1.radius == 1.1 and abs(g1.dr - g.dr) < 0.1 * g.dr


def test_profiles_gradient():
    rng = np.random.default_rng(3)
    prof = np.array([fields.mode(1.2, -0.7, 0.3, 1.5, (0.1, 0.2)), fields.gaussian(2.0)])
    x = rng.uniform(-0.8, 0.8, (10, 2))
    _, g = fields.evaluate(prof, x, grad=True)
    h = 1e-6
    for l in range(2):
        e = np.zeros(2)
        e[l] = h
        fd = (fields.evaluate(prof, x + e) - fields.evaluate(prof, x - e)) / (2 * h)
        assert np.max(np.abs(fd - g[..., l])) < 1e-8


def test_ck_norm_of_linear_function():
    # max over derivatives of order <= 2 of f = x^1 + 2 x^2 on the unit disk
    val = fields.ck_norm(lambda x: x[:, :1] + 2 * x[:, 1:], 1.0, 2)
    assert abs(val - np.sqrt(5.0)) < 0.05
