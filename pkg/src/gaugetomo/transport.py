"""Parallel transport along geodesics: U, its inverse W, scattering data, u^sharp."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._kernels import trace_rays
from .geometry import DT, FanBeamGrid, RayPath, _unit_start, check_batch, domain_radius, fan_coordinates


@dataclass
class TransportSolution:
    """``U`` and ``W`` (integrated independently) at the samples of ``ray``."""

    ray: RayPath
    U: np.ndarray
    W: np.ndarray


@dataclass
class ScatteringData:
    """``C = U(tau)`` per fan node, shape (n_beta, n_alpha, k, k)."""

    grid: FanBeamGrid
    C: np.ndarray
    dt: float = DT

    @property
    def k(self):
        return self.C.shape[-1]


def fundamental_matrix(pair, ray, metric, backend=None):
    """Integrate ``U' = -A U`` and ``W' = W A`` along ``ray`` on its own step schedule."""
    b = trace_rays(metric, pair, ray.entry.x[None], ray.entry.v[None], dt=ray.dt,
                   r_out=ray.radius, record=True, record_U=True, backend=backend)
    check_batch(b)
    return TransportSolution(ray, b.rec_U, b.rec_W)


def weight_at(pair, metric, phase, domain="M1", dt=DT, backend=None):
    """``W(x, v)``: transport from the backward boundary hit of the geodesic to ``(x, v)``.

    The reversed geodesic from ``(x, -v)`` carries the pair ``(A, -Phi)``;
    its fundamental matrix at the boundary equals ``W(x, v)``.
    """
    radius = domain_radius(metric, domain)
    x, v = _unit_start(metric, phase.x, phase.v, radius)
    b = trace_rays(metric, pair, x, -v, dt=dt, r_out=radius, phi_sign=-1.0, backend=backend)
    check_batch(b)
    return b.U[0] if np.ndim(phase.x) == 1 else b.U


def scattering_data(pair, metric, grid, dt=DT, backend=None):
    """Scattering data ``C_A`` over a fan grid."""
    x0, v0 = grid.flat()
    b = trace_rays(metric, pair, x0, v0, dt=dt, r_out=grid.radius, backend=backend)
    check_batch(b)
    k = pair.k
    return ScatteringData(grid, b.U.reshape(grid.shape + (k, k)), dt)


def fan_interp_matrix(fan, beta, alpha):
    """Bilinear interpolation (periodic in beta, clamped in alpha) as a sparse matrix."""
    beta = np.asarray(beta, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    m = len(beta)
    nb, na = fan.n_beta, fan.n_alpha
    p = np.mod(beta, 2 * np.pi) / fan.dbeta
    i0 = np.floor(p).astype(int)
    wb = p - i0
    i0 %= nb
    i1 = (i0 + 1) % nb
    q = np.clip((alpha - fan.alpha[0]) / fan.dalpha, 0.0, na - 1.0)
    j0 = np.minimum(np.floor(q).astype(int), na - 2)
    wa = q - j0
    j1 = j0 + 1
    rows = np.repeat(np.arange(m), 4)
    cols = np.stack([i0 * na + j0, i0 * na + j1, i1 * na + j0, i1 * na + j1], axis=1).ravel()
    vals = np.stack([(1 - wb) * (1 - wa), (1 - wb) * wa, wb * (1 - wa), wb * wa], axis=1).ravel()
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, nb * na))


def backward_hits(metric, fan, x, v, dt=DT, pair=None, backend=None):
    """Trace ``(x, -v)`` to the fan boundary; returns ``(batch, beta, alpha)`` of the entry."""
    b = trace_rays(metric, pair, x, -v, dt=dt, r_out=fan.radius, phi_sign=-1.0, backend=backend)
    check_batch(b)
    beta, alpha = fan_coordinates(metric, fan.radius, b.x, -b.v)
    return b, beta, alpha


def invariant_extension(u, metric, phase, fan, dt=DT, backend=None):
    """``u^sharp(x, v)``: boundary table ``u`` (n_beta, n_alpha, ...) pulled back along geodesics."""
    x = np.atleast_2d(phase.x)
    v = np.atleast_2d(phase.v)
    v = v / metric.norm(x, v)[:, None]
    _, beta, alpha = backward_hits(metric, fan, x, v, dt, backend=backend)
    u = np.asarray(u)
    flat = u.reshape(fan.size, -1)
    out = fan_interp_matrix(fan, beta, alpha) @ flat
    out = out.reshape((len(x),) + u.shape[2:])
    return out[0] if np.ndim(phase.x) == 1 else out


def boundary_h1(fan, D, band=0.05):
    """``H^1(d_+ SM)`` norm of a table ``D`` (n_beta, n_alpha, ...) by mu-weighted first differences.

    Nodes with ``|alpha| > pi/2 - band`` are left out.
    """
    D = np.asarray(D).reshape(fan.shape + (-1,))
    keep = np.abs(fan.alpha) <= 0.5 * np.pi - band
    mu = fan.mu
    val = np.sum(mu[:, keep] * np.sum(np.abs(D[:, keep]) ** 2, axis=-1))
    db = (np.roll(D, -1, axis=0) - D) / fan.dbeta
    val += np.sum(mu[:, keep] * np.sum(np.abs(db[:, keep]) ** 2, axis=-1))
    da = (D[:, 1:] - D[:, :-1]) / fan.dalpha
    kk = keep[1:] & keep[:-1]
    mu_a = 0.5 * (mu[:, 1:] + mu[:, :-1])
    val += np.sum(mu_a[:, kk] * np.sum(np.abs(da[:, kk]) ** 2, axis=-1))
    return float(np.sqrt(val))
