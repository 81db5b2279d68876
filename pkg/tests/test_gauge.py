import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaugetomo import (CallablePair, GaugeField, MetricField, PairField, PhasePoint, PolarGrid,
                       TermPair, boundary_jet_gauge, boundary_normalize, d_A, delta_A,
                       eval_attenuation, gauge_transform, laplacian_A)
from gaugetomo.errors import JetMismatch, PointOutsideDomain
from gaugetomo.gauge import COLLAR, FLAT_FRACTION, cutoff, inner, inner_fn, pair_norms
from gaugetomo.phantoms import random_gauge, random_pair, random_pair_field, random_potential

E = MetricField.euclidean()
X = np.random.default_rng(5).uniform(-0.6, 0.6, (30, 2))


def radial_pair(c):
    """Rank-1 pair with ``A(d/ds) = c`` where ``s = 1 - r``."""

    def func(x):
        r = np.maximum(np.hypot(x[:, 0], x[:, 1]), 1e-300)
        A = np.zeros((len(x), 2, 1, 1), complex)
        A[:, 0, 0, 0] = -c * x[:, 0] / r
        A[:, 1, 0, 0] = -c * x[:, 1] / r
        return A, np.zeros((len(x), 1, 1), complex)

    return CallablePair(1, func)


# -- attenuation ------------------------------------------------------------
def test_zero_pair_attenuation():
    out = eval_attenuation(TermPair.zero(2), PhasePoint(X, np.ones_like(X)))
    assert out.shape == (30, 2, 2) and not np.any(out)


def test_constant_higgs_attenuation():
    out = eval_attenuation(TermPair.constant_higgs([[0.7 - 0.2j]]), PhasePoint(X, X[::-1]))
    assert np.allclose(out, 0.7 - 0.2j)


def test_nilpotent_connection_attenuation():
    pair = TermPair.constant(A1=[[0, 1], [0, 0]], A2=np.zeros((2, 2)))
    out = eval_attenuation(pair, PhasePoint([0.1, 0.2], [1.0, 0.0]))
    assert np.allclose(out, [[0, 1], [0, 0]])


def test_attenuation_outside_M1():
    with pytest.raises(PointOutsideDomain):
        eval_attenuation(TermPair.zero(1), PhasePoint([1.2, 0.0], [1.0, 0.0]))


# -- gauge action -----------------------------------------------------------
def test_identity_gauge_keeps_pair(rng):
    pair = random_pair(2, rng)
    out = gauge_transform(pair, GaugeField.identity(2))
    for a, b in zip(out.coefficients(X), pair.coefficients(X)):
        assert np.allclose(a, b, atol=1e-14)


def test_constant_gauge_conjugates(rng):
    pair = random_pair(2, rng)
    P = np.array([[1.0, 0.5j], [0.2, 2.0]])
    out = gauge_transform(pair, GaugeField.constant(P))
    A, Phi = pair.coefficients(X)
    An, Phin = out.coefficients(X)
    Pi = np.linalg.inv(P)
    assert np.allclose(An, Pi @ A @ P)
    assert np.allclose(Phin, Pi @ Phi @ P)


def test_abelian_gauge_shifts_connection(rng):
    pair = random_pair(1, rng)
    w = lambda x: 0.3 * x[:, 0] ** 2 - 0.2j * x[:, 1]  # noqa: E731
    dw = lambda x: np.stack([0.6 * x[:, 0], -0.2j * np.ones(len(x))], axis=1)  # noqa: E731
    out = gauge_transform(pair, GaugeField.exp_scalar(w, dw))
    A, Phi = pair.coefficients(X)
    An, Phin = out.coefficients(X)
    assert np.allclose(An[..., 0, 0], A[..., 0, 0] + dw(X))
    assert np.allclose(Phin, Phi)


def test_gauge_composition(rng):
    pair = random_pair(2, rng)
    p, q = random_gauge(2, rng), random_gauge(2, rng)
    a = gauge_transform(gauge_transform(pair, p), q)
    b = gauge_transform(pair, p @ q)
    for u, v in zip(a.coefficients(X), b.coefficients(X)):
        assert np.allclose(u, v, atol=1e-12)


def test_bubble_gauge_identity_on_circle(rng):
    p = random_gauge(3, rng)
    th = np.linspace(0, 2 * np.pi, 20)
    xb = np.stack([np.cos(th), np.sin(th)], axis=1)
    assert np.allclose(p.value(xb), np.eye(3))
    # analytic gradient against the finite-difference fallback
    fd = GaugeField(3, p.value)
    assert np.max(np.abs(fd.grad(X) - p.grad(X))) < 1e-8


# -- d_A, delta_A, Delta_A ----------------------------------------------------
def test_d_A_flat_is_gradient(grid64):
    p = np.stack([grid64.points[:, 0] ** 2, grid64.points[:, 1]], axis=1)
    h = d_A(TermPair.zero(2), p, grid64)
    # polar stencils: exact up to the fourth-order angular truncation
    assert np.allclose(h.alpha[:, 0, 0], 2 * grid64.points[:, 0], atol=1e-4)
    assert np.allclose(h.alpha[:, 1, 1], 1.0, atol=1e-4)
    assert not np.any(h.f)


def test_d_A_of_zero(grid32, rng):
    h = d_A(random_pair(2, rng), np.zeros((grid32.size, 2)), grid32)
    assert h.max_abs() == 0


def test_d_A_closed_form(grid64):
    pair = TermPair.constant_higgs([[1.0]])
    x1 = grid64.points[:, 0]
    h = d_A(pair, x1, grid64)
    assert np.allclose(h.alpha[:, 0, 0], 1.0, atol=1e-4)
    assert np.allclose(h.alpha[:, 1, 0], 0.0, atol=1e-4)
    assert np.allclose(h.f[:, 0], x1)


def test_delta_A_zero_and_divergence(grid32):
    pair = TermPair.zero(1)
    assert not np.any(delta_A(pair, PairField.zeros(grid32, 1), E))
    x = grid32.points
    h = PairField(grid32, np.stack([x[:, 0], 0 * x[:, 0]], axis=1), np.zeros(grid32.size))
    assert np.allclose(delta_A(pair, h, E), -1.0, atol=1e-4)


def test_delta_A_adjoint_of_d_A(grid64, bump):
    rng = np.random.default_rng(11)
    pair = random_pair(2, rng)
    p = random_potential(grid64, 2, rng)
    h = random_pair_field(grid64, 2, rng)
    lhs = inner(d_A(pair, p, grid64, bump), h, bump)
    rhs = inner_fn(p, delta_A(pair, h, bump), bump, grid64)
    from gaugetomo.gauge import fn_norm

    rel = abs(lhs - rhs) / (fn_norm(p, bump, grid64) * pair_norms(h, bump))
    assert rel <= 5e-3


def _lap_error(n):
    g = PolarGrid(n, n)
    r2 = np.sum(g.points ** 2, axis=1)
    p = np.sin(np.pi * r2)
    lap = 4 * np.pi * np.cos(np.pi * r2) - 4 * np.pi ** 2 * r2 * np.sin(np.pi * r2)
    out = laplacian_A(TermPair.zero(1), p, E, g)[:, 0]
    inner_nodes = np.arange(g.size) < g.size - 3 * g.n_theta
    return np.max(np.abs(out + lap)[inner_nodes])


def test_laplacian_flat_converges():
    e1, e2 = _lap_error(24), _lap_error(48)
    assert e2 < 1e-2 and e1 / e2 > 3.5


def test_laplacian_zero_and_higgs(grid32):
    c = 0.8 - 0.3j
    pair = TermPair.constant_higgs([[c]])
    p = np.sin(np.pi * np.sum(grid32.points ** 2, axis=1))
    assert not np.any(laplacian_A(pair, np.zeros(grid32.size), E, grid32))
    flat = laplacian_A(TermPair.zero(1), p, E, grid32)
    assert np.allclose(laplacian_A(pair, p, E, grid32), flat + abs(c) ** 2 * p[:, None])


# -- collar constructions ------------------------------------------------------
def _collar_nodes(grid):
    s = grid.radius - grid.R
    return s <= FLAT_FRACTION * COLLAR + 1e-12, s


def test_boundary_normalize_no_normal_part(grid64):
    x = grid64.points
    th = np.arctan2(x[:, 1], x[:, 0])
    tang = np.stack([-np.sin(th), np.cos(th)], axis=1)[:, :, None] * np.ones((1, 1, 1))
    h = PairField(grid64, tang * 0.5, np.zeros(grid64.size))
    ht, phi = boundary_normalize(TermPair.zero(1), h)
    flat, _ = _collar_nodes(grid64)
    assert np.max(np.abs(phi[flat])) < 1e-10
    assert np.max(np.abs((ht - h).alpha)) < 1e-8


@pytest.mark.parametrize("c", [0.0, 0.7])
def test_boundary_normalize_closed_form(grid64, c):
    x = grid64.points
    r = np.maximum(grid64.R, 1e-300)
    # alpha(d/ds) = 1 with s = 1 - r
    alpha = -np.stack([x[:, 0] / r, x[:, 1] / r], axis=1)[:, :, None]
    h = PairField(grid64, alpha, np.zeros(grid64.size))
    ht, phi = boundary_normalize(radial_pair(c), h)
    flat, s = _collar_nodes(grid64)
    expect = s if c == 0 else (1 - np.exp(-c * s)) / c
    # closed form where the radial stencil stays inside the flat part of the cutoff
    deep = s <= FLAT_FRACTION * COLLAR - 2 * grid64.dr + 1e-12
    assert np.max(np.abs(phi[deep, 0] - expect[deep])) < 2e-5
    assert np.max(np.abs(phi[flat, 0] - expect[flat])) < 1e-3
    # normal component removed where the cutoff is flat
    an = -(np.cos(grid64.TH) * ht.alpha[:, 0, 0] + np.sin(grid64.TH) * ht.alpha[:, 1, 0])
    assert np.max(np.abs(an[flat])) < 1e-10


def test_jet_gauge_trivial(rng):
    pair = random_pair(2, rng)
    p = boundary_jet_gauge(pair, pair)
    assert np.allclose(p.value(X), np.eye(2))


def test_jet_gauge_equal_normals(rng):
    pair = random_pair(2, rng)
    bubble = TermPair(np.zeros((1, 6)), np.zeros((1, 3, 2, 2)))
    B = pair + bubble
    assert np.allclose(boundary_jet_gauge(pair, B).value(X), np.eye(2))


def test_jet_gauge_scalar_normal_jump():
    eps = 0.05
    A = TermPair.zero(1)
    B = radial_pair(eps)
    p = boundary_jet_gauge(A, B)
    r = np.linspace(0.82, 1.0, 7)
    pts = np.stack([r * np.cos(0.4), r * np.sin(0.4)], axis=1)
    s = 1.0 - r
    assert np.allclose(p.value(pts)[:, 0, 0], 1 + cutoff(s) * s * eps, atol=1e-12)
    # normal derivative d/ds at the boundary equals eps
    nrm = -np.array([np.cos(0.4), np.sin(0.4)])
    dp = np.einsum("l,l->", p.grad(pts[-1:])[0, :, 0, 0], nrm)
    assert abs(dp - eps) < 1e-8


def test_jet_gauge_rejects_tangential_mismatch():
    with pytest.raises(JetMismatch):
        boundary_jet_gauge(TermPair.zero(1), TermPair.constant(A1=[[0.1]], A2=[[0.0]]))


def test_jet_gauge_matches_boundary_jet(rng):
    from gaugetomo.phantoms import tangential_free_perturbation

    pair = random_pair(2, rng)
    B = pair + tangential_free_perturbation(2, rng)
    Aj = gauge_transform(pair, boundary_jet_gauge(pair, B))
    th = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    xb = np.stack([np.cos(th), np.sin(th)], axis=1)
    assert np.max(np.abs(Aj.coefficients(xb)[0] - B.coefficients(xb)[0])) < 1e-8


# -- norms -------------------------------------------------------------------
def test_pair_norms(grid64):
    assert pair_norms(PairField.zeros(grid64, 1), E) == 0
    h = PairField(grid64, np.zeros((grid64.size, 2, 1)), np.ones(grid64.size))
    assert abs(pair_norms(h, E) - np.sqrt(np.pi)) / np.sqrt(np.pi) < 0.01


@given(st.complex_numbers(min_magnitude=1e-6, max_magnitude=1e3, allow_nan=False,
                          allow_infinity=False))
def test_pair_norm_homogeneous(c):
    g = PolarGrid(17, 16)
    h = random_pair_field(g, 2, np.random.default_rng(2))
    for order in ("L2", "H1"):
        assert pair_norms(c * h, E, order) == pytest.approx(abs(c) * pair_norms(h, E, order),
                                                            rel=1e-12)
