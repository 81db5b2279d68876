"""Closed-form Riemannian metrics on the disk M1 = {|x| <= 1 + eps_ext}."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fields
from .errors import PointOutsideDomain

R_M = 1.0
EPS_EXT = 0.1
R_M1 = R_M + EPS_EXT

METRIC_COLS = fields.PROFILE_COLS + 3  # profile + (s11, s12, s22)


def _as_terms(terms):
    terms = np.asarray(terms, dtype=float)
    if terms.size == 0:
        return np.zeros((0, METRIC_COLS))
    terms = np.atleast_2d(terms)
    if terms.shape[1] != METRIC_COLS:
        raise ValueError(f"metric terms need {METRIC_COLS} columns")
    return np.ascontiguousarray(terms)


@dataclass(frozen=True, eq=False)
class MetricField:
    """Metric ``g(x) = I + sum_t phi_t(x) S_t`` with symmetric constant ``S_t``.

    ``kind`` is informational: ``euclidean`` has no terms, ``conformal`` only
    uses ``S_t = I``, ``general`` anything symmetric.
    """

    kind: str = "euclidean"
    terms: np.ndarray = field(default_factory=lambda: np.zeros((0, METRIC_COLS)))
    r_M: float = R_M
    r_M1: float = R_M1

    def __post_init__(self):
        object.__setattr__(self, "terms", _as_terms(self.terms))

    # -- constructors -------------------------------------------------
    @classmethod
    def euclidean(cls):
        return cls("euclidean")

    @classmethod
    def conformal(cls, amp, width, center=(0.0, 0.0)):
        """``g = c(x) I`` with ``c = 1 + amp * exp(-width |x - center|^2)``."""
        if amp == 0:
            return cls("euclidean")
        row = np.concatenate([fields.gaussian(width, center), [amp, 0.0, amp]])
        return cls("conformal", row[None, :])

    def perturbed(self, terms):
        """Metric with extra terms appended (kind becomes ``general`` unless trivial)."""
        terms = _as_terms(terms)
        if len(terms) == 0:
            return self
        conformal = self.kind != "general" and np.allclose(terms[:, 7], 0) and np.allclose(
            terms[:, 6], terms[:, 8])
        kind = "conformal" if conformal else "general"
        return MetricField(kind, np.vstack([self.terms, terms]), self.r_M, self.r_M1)

    @property
    def profiles(self):
        return self.terms[:, : fields.PROFILE_COLS]

    @property
    def descriptor(self):
        if len(self.terms) == 0:
            return "euclidean"
        rows = ";".join(",".join(repr(float(v)) for v in row) for row in self.terms)
        return f"{self.kind}[{rows}]"

    # -- evaluation ---------------------------------------------------
    def _S(self):
        t = self.terms
        S = np.empty((len(t), 2, 2))
        S[:, 0, 0] = t[:, 6]
        S[:, 0, 1] = S[:, 1, 0] = t[:, 7]
        S[:, 1, 1] = t[:, 8]
        return S

    def check_domain(self, x, radius=None, tol=1e-9):
        radius = self.r_M1 if radius is None else radius
        r = np.sqrt(np.sum(np.asarray(x) ** 2, axis=-1))
        if np.any(r > radius + tol):
            raise PointOutsideDomain(f"point at radius {float(np.max(r)):.6g} > {radius}")

    def g(self, x):
        x = np.atleast_2d(x)
        n = x.shape[0]
        out = np.broadcast_to(np.eye(2), (n, 2, 2)).copy()
        if len(self.terms):
            phi = fields.evaluate(self.profiles, x)
            out += np.einsum("nt,tij->nij", phi, self._S())
        return out

    def dg(self, x):
        """Gradient ``dg[n, l, i, j] = d_l g_ij``."""
        x = np.atleast_2d(x)
        if len(self.terms) == 0:
            return np.zeros((x.shape[0], 2, 2, 2))
        _, grad = fields.evaluate(self.profiles, x, grad=True)
        return np.einsum("ntl,tij->nlij", grad, self._S())

    def g_inv(self, x):
        return np.linalg.inv(self.g(x))

    def sqrt_det(self, x):
        return np.sqrt(np.linalg.det(self.g(x)))

    def christoffel(self, x):
        """Christoffel symbols ``Gamma[n, k, i, j]`` (symmetric in i, j)."""
        gi = self.g_inv(x)
        dg = self.dg(x)
        # T[n, l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
        T = np.einsum("nijl->nlij", dg) + np.einsum("njil->nlij", dg) - dg
        return 0.5 * np.einsum("nkl,nlij->nkij", gi, T)

    def accel(self, x, v):
        """Geodesic acceleration ``-Gamma(v, v)`` for points (n, 2), velocities (n, 2)."""
        if len(self.terms) == 0:
            return np.zeros_like(v)
        phi, grad = fields.evaluate(self.profiles, x, grad=True)
        t = self.terms
        s11, s12, s22 = t[:, 6], t[:, 7], t[:, 8]
        g11 = 1.0 + phi @ s11
        g12 = phi @ s12
        g22 = 1.0 + phi @ s22
        v0, v1 = v[:, 0, None], v[:, 1, None]
        Sv0 = s11 * v0 + s12 * v1
        Sv1 = s12 * v0 + s22 * v1
        vSv = Sv0 * v0 + Sv1 * v1
        gv = grad[..., 0] * v0 + grad[..., 1] * v1
        r0 = np.sum(gv * Sv0 - 0.5 * grad[..., 0] * vSv, axis=1)
        r1 = np.sum(gv * Sv1 - 0.5 * grad[..., 1] * vSv, axis=1)
        det = g11 * g22 - g12 * g12
        a0 = (g22 * r0 - g12 * r1) / det
        a1 = (-g12 * r0 + g11 * r1) / det
        return -np.stack([a0, a1], axis=-1)

    def inner(self, x, u, w):
        return np.einsum("ni,nij,nj->n", u, self.g(x), w)

    def norm(self, x, u):
        return np.sqrt(self.inner(x, u, u))

    def frame(self, x):
        """A g-orthonormal, positively oriented frame ``(e1, e2)`` at each point.

        ``e1`` is ``(1, 0)`` rescaled; returns array (n, 2, 2) with frame
        vectors as ``[:, 0, :]`` and ``[:, 1, :]``.
        """
        x = np.atleast_2d(x)
        g = self.g(x)
        e1 = np.zeros_like(x)
        e1[:, 0] = 1.0 / np.sqrt(g[:, 0, 0])
        t = np.zeros_like(x)
        t[:, 1] = 1.0
        return np.stack([e1, _gram_schmidt(g, e1, t)], axis=1)

    def boundary_frame(self, beta, radius):
        """Inward normal frame at boundary points ``radius * (cos b, sin b)``.

        ``e1`` is the g-unit inward normal, ``e2`` its counterclockwise
        g-orthonormal complement.
        """
        beta = np.atleast_1d(np.asarray(beta, dtype=float))
        x = radius * np.stack([np.cos(beta), np.sin(beta)], axis=-1)
        g = self.g(x)
        gi = np.linalg.inv(g)
        ncov = x / radius
        nu = -np.einsum("nij,nj->ni", gi, ncov)
        nu /= np.sqrt(np.einsum("ni,nij,nj->n", nu, g, nu))[:, None]
        t = np.stack([-nu[:, 1], nu[:, 0]], axis=-1)
        return x, np.stack([nu, _gram_schmidt(g, nu, t)], axis=1)

    def boundary_speed(self, beta, radius):
        """``|d/dbeta x(beta)|_g`` for the boundary circle of given radius."""
        beta = np.atleast_1d(np.asarray(beta, dtype=float))
        x = radius * np.stack([np.cos(beta), np.sin(beta)], axis=-1)
        tang = radius * np.stack([-np.sin(beta), np.cos(beta)], axis=-1)
        return self.norm(x, tang)


def _gram_schmidt(g, e1, t):
    t = t - np.einsum("ni,nij,nj->n", t, g, e1)[:, None] * e1
    return t / np.sqrt(np.einsum("ni,nij,nj->n", t, g, t))[:, None]


def metric_eval(metric: MetricField, x):
    """``(g, g_inv, christoffel)`` at a single point or an array of points."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xx = np.atleast_2d(x)
    metric.check_domain(xx)
    g = metric.g(xx)
    gi = np.linalg.inv(g)
    gam = metric.christoffel(xx)
    if single:
        return g[0], gi[0], gam[0]
    return g, gi, gam
