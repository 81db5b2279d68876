"""Seeded phantom families: pairs, gauges, pair fields and metric perturbations.

Everything is a finite sum of Gaussian bumps and low-order trigonometric
modes with coefficients from a ``numpy.random.Generator``.
"""
from __future__ import annotations

import numpy as np

from . import fields
from .gauge import CallablePair, GaugeField, PairField, TermPair
from .metric import R_M, R_M1, MetricField


def _random_profiles(rng, n, max_freq=2.0, max_width=2.0, spread=0.5):
    rows = []
    for _ in range(n):
        rows.append(fields.mode(*rng.uniform(-max_freq, max_freq, 2), rng.uniform(0, 2 * np.pi),
                                rng.uniform(0.3, max_width), rng.uniform(-spread, spread, 2)))
    return np.array(rows)


def _cplx(rng, shape, real=False):
    z = rng.uniform(-1, 1, shape)
    if not real:
        z = z + 1j * rng.uniform(-1, 1, shape)
    return z


def pair_ck_norm(pair, order=3, radius=R_M1, spacing=0.025):
    """Finite-difference C^order norm of all entries of ``(A_1, A_2, Phi)`` on a disk."""
    k = pair.k

    def func(x):
        A, Phi = pair.coefficients(x)
        return np.concatenate([A.reshape(len(x), 2 * k * k), Phi.reshape(len(x), k * k)], axis=1)

    return fields.ck_norm(func, radius, order, spacing)


def metric_ck_norm(metric, order=4, radius=R_M1, spacing=0.025):
    def func(x):
        return (metric.g(x) - np.eye(2)).reshape(len(x), 4)

    return fields.ck_norm(func, radius, order, spacing)


def random_pair(k, rng, n_terms=3, c3=None, scale=0.3, real=False, higgs=True, connection=True):
    """Random :class:`TermPair`; if ``c3`` is given it is rescaled to that C^3 norm."""
    prof = _random_profiles(rng, n_terms)
    coef = _cplx(rng, (n_terms, 3, k, k), real)
    if not connection:
        coef[:, :2] = 0
    if not higgs:
        coef[:, 2] = 0
    pair = TermPair(prof, scale * coef / max(1.0, np.max(np.abs(coef))))
    if c3 is not None:
        measured = pair_ck_norm(pair)
        if measured > 0:
            pair = TermPair(pair.profiles, pair.coef * (c3 / measured))
    return pair


def tangential_free_perturbation(k, rng, n_terms=2, scale=0.1, real=False):
    """Pair with vanishing tangential trace and vanishing Higgs part on the unit circle.

    The 1-form is ``(1 - |x|^2) a(x) + b(x) (x^1 dx^1 + x^2 dx^2)``, so only its
    normal component survives on the boundary; the Higgs part carries the
    factor ``1 - |x|^2``.
    """
    prof = _random_profiles(rng, n_terms)
    coef = _cplx(rng, (n_terms, 3, k, k), real)
    coef = scale * coef / np.max(np.abs(coef))
    base = TermPair(prof, coef)
    prof_n = _random_profiles(rng, 1)
    c_n = _cplx(rng, (1, k, k), real)
    c_n = scale * c_n / np.max(np.abs(c_n))

    def func(x):
        A, Phi = base.coefficients(x)
        b = 1.0 - np.sum(x * x, axis=1)
        beta = np.einsum("nt,tij->nij", fields.evaluate(prof_n, x), c_n)
        A = b[:, None, None, None] * A + x[:, :, None, None] * beta[:, None]
        return A, b[:, None, None] * Phi

    return CallablePair(k, func)


def random_gauge(k, rng, n_terms=2, scale=0.3, real=False):
    """Gauge ``id + (1 - |x|^2) Q(x)``; identity on the unit circle."""
    prof = _random_profiles(rng, n_terms)
    mats = _cplx(rng, (n_terms, k, k), real)
    mats = scale * mats / np.max(np.abs(mats))
    return GaugeField.bubble(prof, mats, R_M)


def random_potential(grid, k, rng, n_terms=3, scale=1.0, real=False):
    """Grid function vanishing on the outer circle of ``grid``."""
    x = grid.points
    prof = _random_profiles(rng, n_terms)
    c = _cplx(rng, (n_terms, k), real)
    q = fields.evaluate(prof, x) @ c
    bub = 1.0 - np.sum(x * x, axis=1) / grid.radius ** 2
    return scale * bub[:, None] * q


def potential_function(k, rng, n_terms=3, scale=1.0, real=False, radius=R_M):
    """Callable ``q(x)`` (n, k) vanishing on the circle of the given radius.

    ``q.grad(x)`` returns the Cartesian gradient, shape (n, 2, k).
    """
    prof = _random_profiles(rng, n_terms)
    c = scale * _cplx(rng, (n_terms, k), real)

    def q(x):
        x = np.atleast_2d(x)
        bub = 1.0 - np.sum(x * x, axis=1) / radius ** 2
        return bub[:, None] * (fields.evaluate(prof, x) @ c)

    def grad(x):
        x = np.atleast_2d(x)
        bub = 1.0 - np.sum(x * x, axis=1) / radius ** 2
        phi, g = fields.evaluate(prof, x, grad=True)
        val = phi @ c
        dval = np.swapaxes(g, 1, 2) @ c
        return (-2.0 * x / radius ** 2)[:, :, None] * val[:, None] + bub[:, None, None] * dval

    q.grad = grad
    return q


def function_ck_norm(func, order=2, radius=R_M, spacing=0.02):
    return fields.ck_norm(func, radius, order, spacing)


def random_weight(k, rng, n_terms=2, scale=0.25, real=False):
    """Smooth invertible weight ``W(x, v) = id + sum_t phi_t(x) (P_t + v^1 Q_t + v^2 R_t)``.

    The perturbation is scaled so its entries stay below ``scale`` times the
    worst case, keeping ``W`` close to the identity.
    """
    prof = _random_profiles(rng, n_terms)
    c = _cplx(rng, (n_terms, 3, k, k), real)
    c = scale * c / (3.0 * k * max(1.0, np.max(np.abs(c))))
    flat = c.reshape(n_terms, 3 * k * k)

    def W(x, v):
        x = np.atleast_2d(x)
        v = np.atleast_2d(v)
        m = (fields.evaluate(prof, x) @ flat).reshape(len(x), 3, k, k)
        return (np.eye(k) + m[:, 0] + v[:, 0, None, None] * m[:, 1]
                + v[:, 1, None, None] * m[:, 2])

    return W


def random_pair_field(grid, k, rng, n_terms=3, scale=1.0, real=False, alpha=True, f=True):
    x = grid.points
    prof = _random_profiles(rng, n_terms)
    phi = fields.evaluate(prof, x)
    a = phi @ _cplx(rng, (n_terms, 2 * k), real) if alpha else np.zeros((len(x), 2 * k))
    g = phi @ _cplx(rng, (n_terms, k), real) if f else np.zeros((len(x), k))
    return PairField(grid, scale * a.reshape(len(x), 2, k), scale * g)


def random_boundary_data(fan, k, rng, n_modes=3, real=False):
    """Smooth sinogram-like table on a fan grid, shape (n_beta, n_alpha, k)."""
    B, Al = np.meshgrid(fan.beta, fan.alpha, indexing="ij")
    u = np.zeros(B.shape + (k,), complex)
    for _ in range(n_modes):
        m = rng.integers(0, 3)
        c = _cplx(rng, (k,), real)
        a = rng.uniform(0.5, 2.0)
        ph = rng.uniform(0, 2 * np.pi)
        u += (np.cos(m * B + ph) * np.cos(a * Al))[..., None] * c
    return u


def metric_perturbation(rng, eps, n_terms=2):
    """Conformal terms rescaled so the C^4 norm of ``g - g0`` is ``eps``."""
    rows = []
    for _ in range(n_terms):
        prof = fields.mode(*rng.uniform(-1.0, 1.0, 2), rng.uniform(0, 2 * np.pi),
                           rng.uniform(0.5, 1.5), rng.uniform(-0.3, 0.3, 2))
        amp = rng.uniform(-1, 1)
        rows.append(np.concatenate([prof, [amp, 0.0, amp]]))
    terms = np.array(rows)
    if eps == 0:
        return terms[:0]
    m = MetricField("conformal", terms)
    measured = metric_ck_norm(m)
    terms[:, 6:] *= eps / measured
    return terms


def default_metric(amp=0.05, width=4.0):
    return MetricField.conformal(amp, width)
