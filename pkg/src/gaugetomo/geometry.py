"""Domains, geodesic tracing, fan-beam boundary grids and simplicity diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import DIVERGED, TRAPPED, trace_rays
from .errors import IntegrationDiverged, TrappedRay
from .metric import R_M, R_M1, MetricField, metric_eval  # noqa: F401  (re-export)

DT = 1.0 / 256
BOUNDARY_TOL = 1e-10


def domain_radius(metric, domain):
    if isinstance(domain, (int, float)):
        return float(domain)
    d = str(domain).upper()
    if d == "M":
        return metric.r_M
    if d == "M1":
        return metric.r_M1
    raise ValueError(f"unknown domain {domain!r}")


@dataclass
class PhasePoint:
    """Point ``x`` and tangent vector ``v`` (arrays of shape (2,) or (n, 2))."""

    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)

    def normalized(self, metric):
        x, v = np.atleast_2d(self.x), np.atleast_2d(self.v)
        v = v / metric.norm(x, v)[:, None]
        return PhasePoint(self.x, v.reshape(self.v.shape))

    def reversed(self):
        return PhasePoint(self.x, -self.v)


def check_batch(batch, what="ray"):
    if np.any(batch.status == DIVERGED):
        raise IntegrationDiverged(f"{what}: non-finite state during integration")
    if np.any(batch.status == TRAPPED):
        raise TrappedRay(f"{what}: arc length exceeded the trapping limit without exit")


# --------------------------------------------------------------------------
# fan-beam grid
# --------------------------------------------------------------------------
@dataclass
class FanBeamGrid:
    """Tensor grid of inward directions on the boundary circle.

    ``beta`` is the counterclockwise boundary angle, ``alpha`` the angle of
    ``v`` from the inward unit normal, counterclockwise, in the g-orthonormal
    frame ``(nu, nu_perp)``.  Arrays ``x``, ``v`` have shape
    (n_beta, n_alpha, 2); ``mu`` holds ``<v, nu>_g`` times the quadrature
    weight ``|dx/dbeta|_g dbeta dalpha``.
    """

    metric: MetricField
    radius: float
    n_beta: int
    n_alpha: int
    beta: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)
    frame: np.ndarray = field(repr=False)
    cos_alpha: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return (self.n_beta, self.n_alpha)

    @property
    def size(self):
        return self.n_beta * self.n_alpha

    @property
    def dbeta(self):
        return 2.0 * np.pi / self.n_beta

    @property
    def dalpha(self):
        return np.pi / self.n_alpha

    def flat(self):
        return self.x.reshape(-1, 2), self.v.reshape(-1, 2)

    def fan_coordinates(self, x, v):
        """Inverse map: boundary points and inward vectors -> ``(beta, alpha)``."""
        return fan_coordinates(self.metric, self.radius, x, v)

    def same_nodes(self, other):
        return (self.n_beta == other.n_beta and self.n_alpha == other.n_alpha
                and self.radius == other.radius)


def fan_beam_grid(metric, n_beta, n_alpha, domain="M"):
    """Uniform ``(beta, alpha)`` grid on the inward boundary directions.

    ``alpha`` sits at cell midpoints of ``(-pi/2, pi/2)`` so tangential
    directions are never nodes.
    """
    if n_beta < 4 or n_alpha < 4:
        raise ValueError("n_beta and n_alpha must be at least 4")
    radius = domain_radius(metric, domain)
    beta = 2.0 * np.pi * np.arange(n_beta) / n_beta
    alpha = -0.5 * np.pi + (np.arange(n_alpha) + 0.5) * np.pi / n_alpha
    xb, fr = metric.boundary_frame(beta, radius)
    ca, sa = np.cos(alpha), np.sin(alpha)
    v = ca[None, :, None] * fr[:, None, 0, :] + sa[None, :, None] * fr[:, None, 1, :]
    x = np.broadcast_to(xb[:, None, :], v.shape).copy()
    speed = metric.boundary_speed(beta, radius)
    mu = ca[None, :] * speed[:, None] * (2.0 * np.pi / n_beta) * (np.pi / n_alpha)
    return FanBeamGrid(metric, radius, n_beta, n_alpha, beta, alpha, x, v, mu, fr,
                       np.broadcast_to(ca, (n_beta, n_alpha)).copy())


def fan_coordinates(metric, radius, x, v):
    x = np.atleast_2d(x)
    v = np.atleast_2d(v)
    beta = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2.0 * np.pi)
    _, fr = metric.boundary_frame(beta, radius)
    g = metric.g(radius * np.stack([np.cos(beta), np.sin(beta)], axis=-1))
    c = np.einsum("ni,nij,nj->n", v, g, fr[:, 0])
    s = np.einsum("ni,nij,nj->n", v, g, fr[:, 1])
    return beta, np.arctan2(s, c)


# --------------------------------------------------------------------------
# rays
# --------------------------------------------------------------------------
@dataclass
class RayPath:
    """A traced geodesic: samples ``t`` (m,), ``x``, ``v`` (m, 2) and end points."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    tau: float
    entry: PhasePoint
    exit: PhasePoint
    dt: float
    radius: float


def _unit_start(metric, x, v, radius, tol=1e-9):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if np.any(np.hypot(x[:, 0], x[:, 1]) > radius + tol):
        from .errors import PointOutsideDomain

        raise PointOutsideDomain("start point outside the domain")
    nrm = metric.norm(x, v)
    if np.any(np.abs(nrm - 1.0) > 1e-10):
        v = v / nrm[:, None]
    return x, v


def geodesic_trace(metric, start, domain="M", dt=DT, backend=None):
    """Trace the unit-speed geodesic from ``start`` until it leaves the domain."""
    radius = domain_radius(metric, domain)
    x0, v0 = _unit_start(metric, start.x, start.v, radius)
    b = trace_rays(metric, None, x0, v0, dt=dt, r_out=radius, record=True, backend=backend)
    check_batch(b)
    return RayPath(b.rec_t, b.rec_x, b.rec_v, float(b.tau[0]), PhasePoint(x0[0], v0[0]),
                   PhasePoint(b.x[0], b.v[0]), dt, radius)


def scattering_relation(metric, entry, domain="M", dt=DT, backend=None):
    """Exit phase point of the geodesic through ``entry``; works on arrays of points."""
    radius = domain_radius(metric, domain)
    x0, v0 = _unit_start(metric, entry.x, entry.v, radius)
    b = trace_rays(metric, None, x0, v0, dt=dt, r_out=radius, backend=backend)
    check_batch(b)
    if np.ndim(entry.x) == 1:
        return PhasePoint(b.x[0], b.v[0])
    return PhasePoint(b.x, b.v)


def exit_times(metric, fan, dt=DT, backend=None):
    """``tau`` at every node of a fan grid, shape (n_beta, n_alpha)."""
    x0, v0 = fan.flat()
    b = trace_rays(metric, None, x0, v0, dt=dt, r_out=fan.radius, backend=backend)
    check_batch(b)
    return b.tau.reshape(fan.shape)


# --------------------------------------------------------------------------
# simplicity
# --------------------------------------------------------------------------
@dataclass
class SimplicityReport:
    passed: bool
    min_jacobi: float
    min_convexity: float
    n_rays: int

    def __str__(self):
        state = "pass" if self.passed else "fail"
        return (f"simplicity {state}: min b(t)/t = {self.min_jacobi:.4g}, "
                f"min boundary convexity = {self.min_convexity:.4g} over {self.n_rays} rays")


def _jacobi_min(metric, x0, v0, dt, radius, eps, backend):
    """Min over rays of ``b(t)/t`` from finite differences of neighbouring geodesics."""
    n = len(x0)
    g0 = metric.g(x0)
    nperp = np.stack([-v0[:, 1], v0[:, 0]], axis=-1)
    nperp -= np.einsum("ni,nij,nj->n", nperp, g0, v0)[:, None] * v0
    nperp /= np.sqrt(np.einsum("ni,nij,nj->n", nperp, g0, nperp))[:, None]
    vp = np.cos(eps) * v0 + np.sin(eps) * nperp
    vm = np.cos(eps) * v0 - np.sin(eps) * nperp
    X0 = np.concatenate([x0, x0, x0])
    V0 = np.concatenate([v0, vp, vm])
    b = trace_rays(metric, None, X0, V0, dt=dt, r_out=radius + 0.5, record=True,
                   max_len=40.0 * radius, backend=backend)
    best = np.inf
    for i in range(n):
        segs = [b.segment(i), b.segment(i + n), b.segment(i + 2 * n)]
        m = min(s.stop - s.start for s in segs) - 1
        if m < 3:
            continue
        xc = b.rec_x[segs[0]][1:m]
        vc = b.rec_v[segs[0]][1:m]
        t = b.rec_t[segs[0]][1:m]
        keep = np.hypot(xc[:, 0], xc[:, 1]) <= radius
        J = (b.rec_x[segs[1]][1:m] - b.rec_x[segs[2]][1:m]) / (2.0 * np.sin(eps))
        g = metric.g(xc)
        nc = np.stack([-vc[:, 1], vc[:, 0]], axis=-1)
        nc -= np.einsum("ni,nij,nj->n", nc, g, vc)[:, None] * vc / np.einsum(
            "ni,nij,nj->n", vc, g, vc)[:, None]
        nc /= np.sqrt(np.einsum("ni,nij,nj->n", nc, g, nc))[:, None]
        bt = np.einsum("ni,nij,nj->n", J, g, nc)
        if np.any(keep):
            best = min(best, float(np.min(bt[keep] / t[keep])))
    return best


def simplicity_check(metric, probe_grid, dt=DT, eps=1e-4, n_boundary=128, backend=None):
    """Conjugate-point and boundary-convexity diagnostics over a probe fan grid.

    The Jacobi field normal to each probe geodesic is formed from its two
    neighbours launched at angles ``+-eps``; ``b(t)/t`` must stay positive.
    Convexity uses ``d^2/dt^2 |x|^2 / 2 = |v|^2 + x . a`` for geodesics
    tangent to the boundary, which must be positive.
    """
    radius = probe_grid.radius
    x0, v0 = probe_grid.flat()
    jmin = _jacobi_min(metric, x0, v0, dt, radius, eps, backend)
    beta = np.linspace(0, 2 * np.pi, n_boundary, endpoint=False)
    xb, fr = metric.boundary_frame(beta, radius)
    conv = np.inf
    for sgn in (1.0, -1.0):
        vt = sgn * fr[:, 1]
        a = metric.accel(xb, vt)
        val = np.sum(vt * vt, axis=1) + np.sum(xb * a, axis=1)
        conv = min(conv, float(np.min(val)))
    passed = bool(jmin > 0 and conv > 0)
    return SimplicityReport(passed, jmin, conv, len(x0))
