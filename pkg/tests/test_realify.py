"""Complex-to-real reduction: block weights, realified systems, transform equivalence."""
import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from gaugetomo import realify
from gaugetomo.gauge import PairField, TermPair, d_A
from gaugetomo.geometry import fan_beam_grid
from gaugetomo.phantoms import random_pair, random_pair_field

entries = st.floats(-1, 1, allow_nan=False)


def cmat(k):
    return st.tuples(arrays(float, (k, k), elements=entries),
                     arrays(float, (k, k), elements=entries)).map(lambda t: t[0] + 1j * t[1])


# --------------------------------------------------------------------------
# weights
# --------------------------------------------------------------------------
@pytest.mark.parametrize("k", [1, 2, 3])
def test_identity_maps_to_identity(k):
    assert np.array_equal(realify.realify_weight(np.eye(k, dtype=complex)), np.eye(2 * k))


def test_scalar_block():
    a, b = 0.7, -1.3
    Wr = realify.realify_weight(np.array([[a + 1j * b]]))
    assert np.array_equal(Wr, [[a, -b], [b, a]])
    assert np.linalg.det(Wr) == pytest.approx(a * a + b * b, abs=1e-14)


def test_determinant_identity_random(rng):
    for _ in range(200):
        W = rng.uniform(-1, 1, (2, 2)) + 1j * rng.uniform(-1, 1, (2, 2))
        d = abs(np.linalg.det(W)) ** 2
        assert abs(np.linalg.det(realify.realify_weight(W)) - d) <= 1e-12


@given(st.integers(1, 4).flatmap(lambda k: st.tuples(cmat(k), cmat(k))))
def test_homomorphism(pair):
    W1, W2 = pair
    lhs = realify.realify_weight(W1 @ W2)
    rhs = realify.realify_weight(W1) @ realify.realify_weight(W2)
    assert np.allclose(lhs, rhs, atol=1e-13, rtol=0)


@given(st.integers(1, 4).flatmap(cmat))
def test_determinant_nonnegative(W):
    d = np.linalg.det(realify.realify_weight(W))
    assert d >= -1e-12
    assert d == pytest.approx(abs(np.linalg.det(W)) ** 2, abs=1e-12)


def test_invertibility_correspondence():
    W = np.array([[1.0, 1j], [1j, -1.0]])          # det = -1 - (-1) = 0
    assert abs(np.linalg.det(W)) < 1e-15
    assert abs(np.linalg.det(realify.realify_weight(W))) < 1e-15


def test_batched_blocks(rng):
    W = rng.normal(size=(5, 3, 2, 2)) + 1j * rng.normal(size=(5, 3, 2, 2))
    R = realify.realify_weight(W)
    assert R.shape == (5, 3, 4, 4)
    assert np.array_equal(R[2, 1], realify.realify_weight(W[2, 1]))


def test_vector_stack_round_trip(rng):
    h = rng.normal(size=(7, 3)) + 1j * rng.normal(size=(7, 3))
    s = realify.stack_vector(h)
    assert np.array_equal(s[:, :3], h.real) and np.array_equal(s[:, 3:], h.imag)
    assert np.array_equal(realify.unstack_vector(s), h)


# --------------------------------------------------------------------------
# realified systems
# --------------------------------------------------------------------------
def test_real_pair_gives_diagonal_blocks(rng, grid32):
    pair = random_pair(2, rng, real=True)
    h = random_pair_field(grid32, 2, rng, real=True)
    rp, rh = realify.realify_system(pair, h)
    A, Phi = rp.coefficients(grid32.points[:20])
    A0, Phi0 = pair.coefficients(grid32.points[:20])
    assert np.allclose(A[..., :2, :2], A0) and np.allclose(A[..., 2:, 2:], A0)
    assert np.abs(A[..., :2, 2:]).max() == 0 and np.abs(Phi[..., 2:, :2]).max() == 0
    assert np.allclose(Phi[..., :2, :2], Phi0)
    assert np.array_equal(rh.f[:, :2], h.f) and np.abs(rh.f[:, 2:]).max() == 0
    assert np.array_equal(rh.alpha[:, :, :2], h.alpha) and np.abs(rh.alpha[:, :, 2:]).max() == 0


def test_zero_pair_realifies_to_zero(grid32, rng):
    rp, _ = realify.realify_system(TermPair.zero(2), random_pair_field(grid32, 2, rng))
    assert rp.k == 4
    A, Phi = rp.coefficients(grid32.points)
    assert np.abs(A).max() == 0 and np.abs(Phi).max() == 0


def test_imaginary_higgs_block(grid32):
    c = 0.8
    rp, _ = realify.realify_system(TermPair.constant_higgs(np.array([[1j * c]])),
                                   PairField.zeros(grid32, 1))
    _, Phi = rp.coefficients(np.zeros((1, 2)))
    assert np.allclose(Phi[0], [[0, -c], [c, 0]], atol=1e-15)


def test_kernel_correspondence(rng, grid32):
    pair = random_pair(2, rng)
    p = rng.normal(size=(grid32.size, 2)) + 1j * rng.normal(size=(grid32.size, 2))
    ref = realify.realify_field(d_A(pair, p, grid32))
    got = d_A(realify.realify_pair(pair), realify.stack_vector(p), grid32)
    assert np.allclose(got.alpha, ref.alpha, atol=1e-12, rtol=0)
    assert np.allclose(got.f, ref.f, atol=1e-12, rtol=0)


# --------------------------------------------------------------------------
# transform equivalence
# --------------------------------------------------------------------------
def test_zero_field_gives_zero(bump, grid32):
    fan = fan_beam_grid(bump, 8, 8, "M")
    eq = realify.equivalence_check(TermPair.zero(2), bump, PairField.zeros(grid32, 2), fan)
    assert eq["max_mismatch"] == 0 and eq["scale"] == 0


def test_real_scalar_field_has_no_imaginary_channel(bump, grid32, rng):
    fan = fan_beam_grid(bump, 8, 8, "M")
    h = random_pair_field(grid32, 1, rng, real=True)
    rp, rh = realify.realify_system(TermPair.zero(1), h)
    from gaugetomo.xray import forward_pair
    vals = forward_pair(rp, bump, rh, fan, "M").values
    assert np.abs(vals[..., 1]).max() == 0


def test_complex_rank_two_equivalence(bump, grid32, rng):
    fan = fan_beam_grid(bump, 12, 12, "M")
    pair = random_pair(2, rng)
    h = random_pair_field(grid32, 2, rng)
    eq = realify.equivalence_check(pair, bump, h, fan)
    assert eq["scale"] > 1e-3
    assert eq["max_mismatch"] <= 1e-10 * max(1.0, eq["scale"])
    assert eq["max_imag_residue"] <= 1e-10
