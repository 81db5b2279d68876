"""Uniform polar-logical grid on a disk with sparse difference operators.

Nodes are ``(r_i, theta_j)`` with ``r_i = i * dr`` (``r_0 = 0`` is the pole,
``r_{n_r-1}`` the boundary) and ``theta_j = 2 pi j / n_theta``.  The pole row
holds ``n_theta`` copies of the same value.  Grid functions are flattened
row-major, node ``(i, j)`` at index ``i * n_theta + j``.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np
import scipy.sparse as sp


def fd_weights(offsets, order):
    """Finite-difference weights for derivative ``order`` on integer offsets."""
    offsets = np.asarray(offsets, dtype=float)
    m = len(offsets)
    V = np.vander(offsets, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(V, rhs)


_C4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def _lagrange4(s):
    """Cubic Lagrange weights on nodes -1, 0, 1, 2 at local coordinate ``s``."""
    return np.stack([
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ], axis=-1)


class PolarGrid:
    """Polar-logical grid of ``n_r x n_theta`` nodes on the disk of given radius."""

    def __init__(self, n_r, n_theta, radius=1.0):
        if n_r < 6 or n_theta < 4:
            raise ValueError("PolarGrid needs n_r >= 6 and n_theta >= 4")
        if n_theta % 2:
            raise ValueError("n_theta must be even (pole reflection)")
        self.n_r = int(n_r)
        self.n_theta = int(n_theta)
        self.radius = float(radius)
        self.dr = self.radius / (self.n_r - 1)
        self.dtheta = 2.0 * np.pi / self.n_theta
        self.r = np.arange(self.n_r) * self.dr
        self.r[-1] = self.radius
        self.theta = np.arange(self.n_theta) * self.dtheta

    def __repr__(self):
        return f"PolarGrid({self.n_r}, {self.n_theta}, radius={self.radius})"

    def __eq__(self, other):
        return (isinstance(other, PolarGrid) and self.n_r == other.n_r
                and self.n_theta == other.n_theta and self.radius == other.radius)

    def __hash__(self):
        return hash((self.n_r, self.n_theta, self.radius))

    @property
    def shape(self):
        return (self.n_r, self.n_theta)

    @property
    def size(self):
        return self.n_r * self.n_theta

    @cached_property
    def R(self):
        return np.repeat(self.r, self.n_theta)

    @cached_property
    def TH(self):
        return np.tile(self.theta, self.n_r)

    @cached_property
    def points(self):
        return np.stack([self.R * np.cos(self.TH), self.R * np.sin(self.TH)], axis=-1)

    @cached_property
    def weights(self):
        """Trapezoid area weights ``r dr dtheta`` (half weight on the boundary ring)."""
        w = self.r * self.dr
        w[-1] *= 0.5
        return np.repeat(w, self.n_theta) * self.dtheta

    def ring(self, i):
        return np.arange(self.n_theta) + i * self.n_theta

    @cached_property
    def boundary(self):
        return self.ring(self.n_r - 1)

    @cached_property
    def pole(self):
        return self.ring(0)

    def node(self, i, j):
        return i * self.n_theta + (j % self.n_theta)

    # -- difference operators ------------------------------------------
    @cached_property
    def D_r(self):
        """4th-order d/dr along each ray line through the pole."""
        nr, nt = self.n_r, self.n_theta
        half = nt // 2
        rows, cols, vals = [], [], []
        j = np.arange(nt)
        edge = fd_weights([-4, -3, -2, -1, 0], 1)
        near = fd_weights([-3, -2, -1, 0, 1], 1)
        for i in range(nr):
            if i <= nr - 3:
                offs, wts = np.arange(-2, 3), _C4
            elif i == nr - 2:
                offs, wts = np.arange(-3, 2), near
            else:
                offs, wts = np.arange(-4, 1), edge
            for o, w in zip(offs, wts):
                if w == 0.0:
                    continue
                ii = i + o
                jj = j if ii >= 0 else (j + half) % nt
                rows.append(i * nt + j)
                cols.append(abs(ii) * nt + jj)
                vals.append(np.full(nt, w / self.dr))
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(self.size, self.size))

    @cached_property
    def D_theta(self):
        """4th-order periodic d/dtheta on each ring."""
        nt = self.n_theta
        j = np.arange(nt)
        base_r, base_c, base_v = [], [], []
        for o, w in zip(range(-2, 3), _C4):
            if w == 0.0:
                continue
            base_r.append(j)
            base_c.append((j + o) % nt)
            base_v.append(np.full(nt, w / self.dtheta))
        base = sp.csr_matrix((np.concatenate(base_v), (np.concatenate(base_r), np.concatenate(base_c))),
                             shape=(nt, nt))
        return sp.kron(sp.identity(self.n_r, format="csr"), base, format="csr")

    @cached_property
    def _cartesian(self):
        nt = self.n_theta
        R, TH = self.R, self.TH
        inv_r = np.zeros_like(R)
        inv_r[nt:] = 1.0 / R[nt:]
        c, s = np.cos(TH), np.sin(TH)
        Dr, Dt = self.D_r, self.D_theta
        Dx = (sp.diags(c) @ Dr - sp.diags(s * inv_r) @ Dt).tolil()
        Dy = (sp.diags(s) @ Dr + sp.diags(c * inv_r) @ Dt).tolil()
        # pole: least-squares gradient from the directional derivatives D_r f(0, theta_j)
        P = Dr[:nt]
        gx = sp.csr_matrix((2.0 / nt) * (np.cos(self.theta)[None, :] @ P.toarray()))
        gy = sp.csr_matrix((2.0 / nt) * (np.sin(self.theta)[None, :] @ P.toarray()))
        for j in range(nt):
            Dx[j] = gx
            Dy[j] = gy
        return Dx.tocsr(), Dy.tocsr()

    @property
    def Dx(self):
        return self._cartesian[0]

    @property
    def Dy(self):
        return self._cartesian[1]

    def grad(self, u):
        """Cartesian gradient, shape ``(N, 2) + u.shape[1:]``."""
        return np.stack([self.Dx @ u, self.Dy @ u], axis=1)

    # -- quadrature --------------------------------------------------------
    def integrate(self, u, weight=None):
        w = self.weights if weight is None else self.weights * weight
        return np.tensordot(w, u, axes=(0, 0))

    # -- interpolation -----------------------------------------------------
    def interp_matrix(self, pts):
        """Sparse (m, N) cubic interpolation matrix at points ``pts`` (m, 2).

        Points outside the disk get an empty row (extension by zero).
        """
        pts = np.atleast_2d(pts)
        m = len(pts)
        nr, nt = self.n_r, self.n_theta
        half = nt // 2
        rad = np.hypot(pts[:, 0], pts[:, 1])
        inside = rad <= self.radius * (1.0 + 1e-12)
        th = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * np.pi)

        q = np.minimum(rad / self.dr, nr - 1.0)
        i0 = np.floor(q).astype(int)
        i0 = np.minimum(i0, nr - 3)  # last stencil is nr-4 .. nr-1
        wr = _lagrange4(q - i0)
        ir = i0[:, None] + np.arange(-1, 3)[None, :]

        p = th / self.dtheta
        j0 = np.floor(p).astype(int)
        wt = _lagrange4(p - j0)
        jt = j0[:, None] + np.arange(-1, 3)[None, :]

        rows = np.repeat(np.arange(m), 16)
        RR = np.repeat(ir, 4, axis=1)
        JJ = np.tile(jt, (1, 4))
        refl = RR < 0
        JJ = np.where(refl, JJ + half, JJ) % nt
        cols = (np.abs(RR) * nt + JJ).ravel()
        vals = (np.repeat(wr, 4, axis=1) * np.tile(wt, (1, 4))).ravel()
        vals[np.repeat(~inside, 16)] = 0.0
        A = sp.csr_matrix((vals, (rows, cols)), shape=(m, self.size))
        A.eliminate_zeros()
        return A

    def interpolate(self, u, pts):
        return self.interp_matrix(pts) @ u

    # -- misc ----------------------------------------------------------------
    def sample(self, func):
        """Evaluate ``func`` (points -> values) at all nodes."""
        return np.asarray(func(self.points))

    def pole_average(self, u):
        """Copy the mean of the pole row onto all pole copies."""
        u = np.array(u, copy=True)
        u[: self.n_theta] = u[: self.n_theta].mean(axis=0)
        return u


def matching_M1_grid(grid, radius):
    """Grid on the larger disk with (about) the same radial spacing."""
    n_r = int(np.ceil(radius / grid.dr - 1e-9)) + 1
    return PolarGrid(n_r, grid.n_theta, radius)
