"""Connection/Higgs pairs, pair fields on the polar grid, and gauge algebra.

A pair is ``(A, Phi)`` with ``A = A_1 dx^1 + A_2 dx^2``; along a curve it acts by
``A(x, v) = A_1(x) v^1 + A_2(x) v^2 + Phi(x)``.  One-forms on the grid are
stored by their Cartesian components.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import fields
from .errors import JetMismatch, PointOutsideDomain, SingularGauge
from .grid import PolarGrid
from .metric import R_M, R_M1, MetricField

COLLAR = 0.2
_EUCLID = MetricField.euclidean()
FLAT_FRACTION = 0.7


# --------------------------------------------------------------------------
# pairs
# --------------------------------------------------------------------------
class AttenuationPair:
    """Base class: subclasses implement :meth:`coefficients`."""

    k: int

    def coefficients(self, x):
        """``(A, Phi)`` at points ``x`` (n, 2): ``A`` (n, 2, k, k), ``Phi`` (n, k, k)."""
        raise NotImplementedError

    def kernel_tables(self):
        """Term tables for the compiled integrator, or ``None``.

        Either ``(profiles, coef)`` or ``(profiles, coef, gauge_profiles,
        gauge_mats, gauge_scale)`` for a term pair under a bubble gauge.
        """
        return None

    def att(self, x, v, phi_sign=1.0):
        A, Phi = self.coefficients(x)
        return A[:, 0] * v[:, 0, None, None] + A[:, 1] * v[:, 1, None, None] + phi_sign * Phi

    def on_grid(self, grid):
        cache = self.__dict__.setdefault("_grid_cache", {})
        if grid not in cache:
            cache[grid] = self.coefficients(grid.points)
        return cache[grid]

    def is_real(self, x):
        A, Phi = self.coefficients(x)
        return np.allclose(A.imag, 0) and np.allclose(Phi.imag, 0)

    def __sub__(self, other):
        return combine(self, other, 1.0, -1.0)

    def __add__(self, other):
        return combine(self, other, 1.0, 1.0)

    def scaled(self, c):
        return combine(self, self, c, 0.0)


class TermPair(AttenuationPair):
    """Pair given by profile terms: ``(A_1, A_2, Phi) = sum_t phi_t(x) C_t``.

    Parameters
    ----------
    profiles : array (T, 6)
        Profile rows, see :mod:`gaugetomo.fields`.
    coef : complex array (T, 3, k, k)
        Matrices multiplying each profile for ``A_1``, ``A_2`` and ``Phi``.
    """

    def __init__(self, profiles, coef, k=None):
        self.profiles = fields.as_profiles(profiles)
        coef = np.asarray(coef, dtype=complex)
        if coef.size == 0:
            if k is None:
                raise ValueError("k is required for an empty pair")
            coef = np.zeros((0, 3, k, k), complex)
        self.coef = np.ascontiguousarray(coef)
        self.k = int(self.coef.shape[-1])
        if len(self.profiles) != len(self.coef):
            raise ValueError("profiles and coefficients disagree in length")

    @classmethod
    def zero(cls, k):
        return cls(np.zeros((0, 6)), np.zeros((0, 3, k, k), complex), k=k)

    @classmethod
    def constant_higgs(cls, Phi):
        Phi = np.atleast_2d(np.asarray(Phi, dtype=complex))
        coef = np.zeros((1, 3) + Phi.shape, complex)
        coef[0, 2] = Phi
        return cls(fields.constant()[None, :], coef)

    @classmethod
    def constant(cls, A1=None, A2=None, Phi=None, k=None):
        mats = [m for m in (A1, A2, Phi) if m is not None]
        k = k or np.atleast_2d(mats[0]).shape[0]
        coef = np.zeros((1, 3, k, k), complex)
        for i, m in enumerate((A1, A2, Phi)):
            if m is not None:
                coef[0, i] = np.atleast_2d(m)
        return cls(fields.constant()[None, :], coef)

    def kernel_tables(self):
        return self.profiles, self.coef

    def coefficients(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        phi = fields.evaluate(self.profiles, x)
        T, k = len(self.coef), self.k
        c = (phi @ self.coef.reshape(T, 3 * k * k)).reshape(len(x), 3, k, k)
        return c[:, :2], c[:, 2]

    def coefficient_grads(self, x):
        """``d_l`` of ``(A_1, A_2, Phi)``: array (n, 2, 3, k, k), first axis after n is l."""
        _, g = fields.evaluate(self.profiles, np.atleast_2d(x), grad=True)
        return np.einsum("ntl,tmij->nlmij", g, self.coef)

    def __repr__(self):
        return f"TermPair(k={self.k}, terms={len(self.coef)})"


class CallablePair(AttenuationPair):
    """Pair given by a function ``x -> (A, Phi)``."""

    def __init__(self, k, func, tables=None):
        self.k = int(k)
        self._func = func
        self._tables = tables

    def kernel_tables(self):
        return self._tables

    def coefficients(self, x):
        A, Phi = self._func(np.atleast_2d(np.asarray(x, dtype=float)))
        return np.asarray(A, dtype=complex), np.asarray(Phi, dtype=complex)


def combine(p, q, a, b):
    """``a p + b q``; stays a :class:`TermPair` when both inputs are."""
    if p.k != q.k:
        raise ValueError("pairs of different rank")
    if isinstance(p, TermPair) and isinstance(q, TermPair):
        if b == 0.0:
            return TermPair(p.profiles, a * p.coef, k=p.k)
        return TermPair(np.vstack([p.profiles, q.profiles]),
                        np.concatenate([a * p.coef, b * q.coef]), k=p.k)

    def func(x):
        A1, P1 = p.coefficients(x)
        A2, P2 = q.coefficients(x)
        return a * A1 + b * A2, a * P1 + b * P2

    return CallablePair(p.k, func)


def eval_attenuation(pair, phase, radius=R_M1):
    """``A_1(x) v^1 + A_2(x) v^2 + Phi(x)`` at a phase point (or arrays of them)."""
    x = np.atleast_2d(np.asarray(phase.x, dtype=float))
    v = np.atleast_2d(np.asarray(phase.v, dtype=float))
    if np.any(np.hypot(x[:, 0], x[:, 1]) > radius + 1e-9):
        raise PointOutsideDomain("attenuation evaluated outside M1")
    out = pair.att(x, v)
    return out[0] if np.ndim(phase.x) == 1 else out


# --------------------------------------------------------------------------
# pair fields
# --------------------------------------------------------------------------
@dataclass
class PairField:
    """``h = [alpha, f]`` on a polar grid: ``alpha`` (N, 2, k), ``f`` (N, k)."""

    grid: PolarGrid
    alpha: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=complex)
        self.f = np.asarray(self.f, dtype=complex)
        if self.f.ndim == 1:
            self.f = self.f[:, None]
        if self.alpha.ndim == 2:
            self.alpha = self.alpha[:, :, None]

    @property
    def k(self):
        return self.f.shape[1]

    @classmethod
    def zeros(cls, grid, k):
        return cls(grid, np.zeros((grid.size, 2, k), complex), np.zeros((grid.size, k), complex))

    @classmethod
    def from_callable(cls, grid, func):
        """``func(points) -> (alpha (n, 2, k), f (n, k))``."""
        a, f = func(grid.points)
        return cls(grid, a, f)

    @classmethod
    def from_vector(cls, grid, vec, k):
        N = grid.size
        vec = np.asarray(vec)
        return cls(grid, np.stack([vec[: N * k].reshape(N, k), vec[N * k: 2 * N * k].reshape(N, k)],
                                  axis=1), vec[2 * N * k:].reshape(N, k))

    def vector(self):
        return np.concatenate([self.alpha[:, 0].ravel(), self.alpha[:, 1].ravel(), self.f.ravel()])

    def copy(self):
        return PairField(self.grid, self.alpha.copy(), self.f.copy())

    def __add__(self, o):
        return PairField(self.grid, self.alpha + o.alpha, self.f + o.f)

    def __sub__(self, o):
        return PairField(self.grid, self.alpha - o.alpha, self.f - o.f)

    def __mul__(self, c):
        return PairField(self.grid, c * self.alpha, c * self.f)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def masked(self, mask):
        """Copy with nodes outside ``mask`` set to zero."""
        m = np.asarray(mask, dtype=float)
        return PairField(self.grid, self.alpha * m[:, None, None], self.f * m[:, None])

    def max_abs(self):
        return float(max(np.max(np.abs(self.alpha), initial=0.0), np.max(np.abs(self.f), initial=0.0)))


def pair_as_field(pair, grid):
    """The pair itself sampled as a rank-k^2 pair field (column-major vec)."""
    A, Phi = pair.on_grid(grid)
    N, k = grid.size, pair.k
    alpha = np.stack([A[:, 0].transpose(0, 2, 1).reshape(N, k * k),
                      A[:, 1].transpose(0, 2, 1).reshape(N, k * k)], axis=1)
    return PairField(grid, alpha, Phi.transpose(0, 2, 1).reshape(N, k * k))


def inner(h1, h2, metric):
    """L^2 inner product of pair fields (conjugate-linear in the second slot)."""
    grid = h1.grid
    x = grid.points
    gi = np.linalg.inv(metric.g(x))
    sg = metric.sqrt_det(x)
    a = np.einsum("nij,nik,njk->n", gi, h1.alpha, np.conj(h2.alpha))
    b = np.einsum("nk,nk->n", h1.f, np.conj(h2.f))
    return grid.integrate(sg * (a + b))


def inner_fn(p, q, metric, grid):
    sg = metric.sqrt_det(grid.points)
    p = p.reshape(grid.size, -1)
    q = q.reshape(grid.size, -1)
    return grid.integrate(sg * np.einsum("nk,nk->n", p, np.conj(q)))


def pair_norms(h, metric, order="L2"):
    """``L2`` or ``H1`` norm of a pair field (H1 adds the gradient of every component)."""
    val = float(np.real(inner(h, h, metric)))
    if order.upper() == "H1":
        val += _grad_energy(h.grid, metric, np.concatenate([h.alpha[:, 0], h.alpha[:, 1], h.f],
                                                           axis=1))
    elif order.upper() != "L2":
        raise ValueError(f"unknown norm order {order!r}")
    return float(np.sqrt(max(val, 0.0)))


def _grad_energy(grid, metric, u):
    x = grid.points
    gi = np.linalg.inv(metric.g(x))
    sg = metric.sqrt_det(x)
    du = np.stack([grid.Dx @ u, grid.Dy @ u], axis=1)
    e = np.einsum("nab,nak,nbk->n", gi, du, np.conj(du)).real
    return float(grid.integrate(sg * e))


def fn_norm(p, metric, grid, order="L2"):
    p = np.asarray(p).reshape(grid.size, -1)
    val = float(np.real(inner_fn(p, p, metric, grid)))
    if order.upper() == "H1":
        val += _grad_energy(grid, metric, p)
    return float(np.sqrt(max(val, 0.0)))


# --------------------------------------------------------------------------
# gauge fields
# --------------------------------------------------------------------------
class GaugeField:
    """Matrix field ``p: M1 -> GL(k)`` with its Cartesian gradient.

    ``value(x)`` returns (n, k, k); ``grad(x)`` returns (n, 2, k, k).  If no
    gradient is given, one is formed by 4th-order central differences.
    """

    FD_STEP = 1e-3

    def __init__(self, k, value, grad=None, boundary_identity=False):
        self.k = int(k)
        self._value = value
        self._grad = grad
        self.boundary_identity = boundary_identity

    def value(self, x):
        return np.asarray(self._value(np.atleast_2d(np.asarray(x, dtype=float))), dtype=complex)

    def grad(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self._grad is not None:
            return np.asarray(self._grad(x), dtype=complex)
        h = self.FD_STEP
        out = []
        for e in (np.array([h, 0.0]), np.array([0.0, h])):
            d = (-self.value(x + 2 * e) + 8 * self.value(x + e) - 8 * self.value(x - e)
                 + self.value(x - 2 * e)) / (12 * h)
            out.append(d)
        return np.stack(out, axis=1)

    def on_grid(self, grid):
        x = grid.points
        return self.value(x), self.grad(x)

    def min_abs_det(self, x):
        return float(np.min(np.abs(np.linalg.det(self.value(x)))))

    def inverse(self):
        """The field ``p^{-1}`` (gradient ``-p^{-1} dp p^{-1}``)."""

        def value(x):
            return np.linalg.inv(self.value(x))

        def grad(x):
            pi = np.linalg.inv(self.value(x))
            return -np.einsum("nij,nljk,nkm->nlim", pi, self.grad(x), pi)

        return GaugeField(self.k, value, grad, self.boundary_identity)

    def __matmul__(self, other):
        def value(x):
            return self.value(x) @ other.value(x)

        def grad(x):
            return (np.einsum("nlij,njk->nlik", self.grad(x), other.value(x))
                    + np.einsum("nij,nljk->nlik", self.value(x), other.grad(x)))

        return GaugeField(self.k, value, grad, self.boundary_identity and other.boundary_identity)

    @classmethod
    def identity(cls, k):
        return cls(k, lambda x: np.broadcast_to(np.eye(k, dtype=complex), (len(x), k, k)).copy(),
                   lambda x: np.zeros((len(x), 2, k, k), complex), boundary_identity=True)

    @classmethod
    def constant(cls, P):
        P = np.atleast_2d(np.asarray(P, dtype=complex))
        k = P.shape[0]
        return cls(k, lambda x: np.broadcast_to(P, (len(x), k, k)).copy(),
                   lambda x: np.zeros((len(x), 2, k, k), complex))

    @classmethod
    def bubble(cls, profiles, mats, radius=R_M):
        """``p = id + (1 - |x|^2 / radius^2) sum_t phi_t(x) P_t`` (identity on the circle)."""
        profiles = fields.as_profiles(profiles)
        mats = np.asarray(mats, dtype=complex)
        k = mats.shape[-1]
        eye = np.eye(k)
        flat = mats.reshape(len(mats), k * k)

        def value(x):
            b = 1.0 - np.sum(x * x, axis=1) / radius ** 2
            Q = (fields.evaluate(profiles, x) @ flat).reshape(len(x), k, k)
            return eye + b[:, None, None] * Q

        def grad(x):
            b = 1.0 - np.sum(x * x, axis=1) / radius ** 2
            db = -2.0 * x / radius ** 2
            phi, g = fields.evaluate(profiles, x, grad=True)
            Q = (phi @ flat).reshape(len(x), k, k)
            dQ = (np.swapaxes(g, 1, 2) @ flat).reshape(len(x), 2, k, k)
            return db[:, :, None, None] * Q[:, None] + b[:, None, None, None] * dQ

        out = cls(k, value, grad, boundary_identity=True)
        out.bubble_tables = (profiles, mats, 1.0 / radius ** 2)
        return out

    @classmethod
    def exp_scalar(cls, w, dw):
        """Abelian gauge ``p = exp(w)`` for rank 1 (``w``, ``dw`` callables)."""

        def value(x):
            return np.exp(np.asarray(w(x), dtype=complex))[:, None, None]

        def grad(x):
            return (np.exp(np.asarray(w(x), dtype=complex))[:, None] * dw(x))[:, :, None, None]

        return cls(1, value, grad)

    @classmethod
    def from_grid(cls, grid, P, boundary_identity=False):
        """Gauge sampled on a grid; interpolated cubically, gradient from grid differences."""
        P = np.asarray(P, dtype=complex)
        N, k = P.shape[0], P.shape[-1]
        flat = P.reshape(N, k * k)
        dP = np.stack([grid.Dx @ flat, grid.Dy @ flat], axis=1)

        def value(x):
            return (grid.interp_matrix(x) @ flat).reshape(-1, k, k)

        def grad(x):
            I = grid.interp_matrix(x)
            return np.stack([I @ dP[:, 0], I @ dP[:, 1]], axis=1).reshape(-1, 2, k, k)

        g = cls(k, value, grad, boundary_identity)
        g.grid_values = P
        g.grid = grid
        return g


def gauge_transform(pair, p, check_points=None):
    """Gauge action ``(A, Phi) -> (p^{-1} dp + p^{-1} A p, p^{-1} Phi p)``."""
    if p.k != pair.k:
        raise ValueError("gauge and pair have different rank")
    if check_points is not None and p.min_abs_det(check_points) < 1e-10:
        raise SingularGauge("gauge determinant vanishes")

    def func(x):
        P = p.value(x)
        if np.min(np.abs(np.linalg.det(P))) < 1e-10:
            raise SingularGauge("gauge determinant vanishes")
        Pi = np.linalg.inv(P)
        dP = p.grad(x)
        A, Phi = pair.coefficients(x)
        An = Pi[:, None] @ (dP + A @ P[:, None])
        return An, Pi @ Phi @ P

    tables = None
    base = pair.kernel_tables()
    bub = getattr(p, "bubble_tables", None)
    if base is not None and len(base) == 2 and bub is not None and pair.k <= 4:
        tables = (base[0], base[1], bub[0], np.ascontiguousarray(bub[1]), bub[2])
    return CallablePair(pair.k, func, tables)


# --------------------------------------------------------------------------
# discrete d_A, delta_A, Delta_A
# --------------------------------------------------------------------------
def _blockdiag(blocks):
    N, k, _ = blocks.shape
    return sp.bsr_matrix((np.ascontiguousarray(blocks), np.arange(N), np.arange(N + 1)),
                         shape=(N * k, N * k)).tocsr()


def _kron(D, k):
    return sp.kron(D, sp.identity(k, format="csr"), format="csr")


class PairOperators:
    """Sparse ``d_A`` (Nk -> 3Nk), ``delta_A`` (3Nk -> Nk) and ``Delta_A`` on a grid.

    Vectors of pair fields are ordered ``[alpha_1, alpha_2, f]``, each block
    flattened node-major (see :meth:`PairField.vector`).
    """

    def __init__(self, pair, metric, grid):
        # no reference back to the pair: this object lives in the pair's cache
        self.metric, self.grid = metric, grid
        k = pair.k
        self.k = k
        x = grid.points
        A, Phi = pair.on_grid(grid)
        g = metric.g(x)
        gi = np.linalg.inv(g)
        sg = np.sqrt(np.linalg.det(g))
        Dx, Dy = _kron(grid.Dx, k), _kron(grid.Dy, k)
        self.d = sp.vstack([Dx + _blockdiag(A[:, 0]), Dy + _blockdiag(A[:, 1]),
                            _blockdiag(Phi)], format="csr")
        Ah = np.conj(np.swapaxes(A, -1, -2))
        Phih = np.conj(np.swapaxes(Phi, -1, -2))
        rep = lambda a: np.repeat(a, k)  # noqa: E731
        inv_sg = sp.diags(rep(1.0 / sg))
        cols = []
        for j in range(2):
            div = -(inv_sg @ (Dx @ sp.diags(rep(sg * gi[:, 0, j]))
                              + Dy @ sp.diags(rep(sg * gi[:, 1, j]))))
            alg = _blockdiag(gi[:, 0, j, None, None] * Ah[:, 0] + gi[:, 1, j, None, None] * Ah[:, 1])
            cols.append(div + alg)
        cols.append(_blockdiag(Phih))
        self.delta = sp.hstack(cols, format="csr")
        self._lap = None

    @property
    def laplacian(self):
        if self._lap is None:
            self._lap = (self.delta @ self.d).tocsr()
        return self._lap


def operators(pair, metric, grid):
    cache = pair.__dict__.setdefault("_op_cache", {})
    key = (id(metric), grid)
    if key not in cache:
        cache[key] = (metric, PairOperators(pair, metric, grid))
    return cache[key][1]


def d_A(pair, p, grid, metric=None):
    """``d_A p = [dp + A p, Phi p]`` for a grid function ``p`` (N, k)."""
    metric = metric or _EUCLID
    p = np.asarray(p, dtype=complex).reshape(grid.size, pair.k)
    out = operators(pair, metric, grid).d @ p.ravel()
    return PairField.from_vector(grid, out, pair.k)


def delta_A(pair, h, metric):
    """``-div_g alpha + g^{ij} A_i^* alpha_j + Phi^* f`` as a grid function (N, k)."""
    grid = h.grid
    out = operators(pair, metric, grid).delta @ h.vector()
    return out.reshape(grid.size, pair.k)


def laplacian_A(pair, p, metric, grid):
    """``Delta_A p = delta_A d_A p``."""
    p = np.asarray(p, dtype=complex).reshape(grid.size, pair.k)
    return (operators(pair, metric, grid).laplacian @ p.ravel()).reshape(grid.size, pair.k)


# --------------------------------------------------------------------------
# collar constructions
# --------------------------------------------------------------------------
def cutoff(s, width=COLLAR, flat=FLAT_FRACTION):
    """Degree-5 smoothstep cutoff: 1 for ``s <= flat*width``, 0 for ``s >= width``."""
    s = np.asarray(s, dtype=float)
    a = flat * width
    u = np.clip((s - a) / (width - a), 0.0, 1.0)
    return 1.0 - u ** 3 * (10.0 - 15.0 * u + 6.0 * u * u)


def cutoff_deriv(s, width=COLLAR, flat=FLAT_FRACTION):
    s = np.asarray(s, dtype=float)
    a = flat * width
    u = (s - a) / (width - a)
    inside = (u > 0) & (u < 1)
    out = np.zeros_like(s)
    uu = u[inside]
    out[inside] = -30.0 * uu ** 2 * (1.0 - uu) ** 2 / (width - a)
    return out


def _radial(A, TH):
    """``A(d/ds)`` with ``s = 1 - r``: minus the radial component."""
    c, s = np.cos(TH), np.sin(TH)
    return -(c[:, None, None] * A[:, 0] + s[:, None, None] * A[:, 1])


def boundary_normalize(pair, h, width=COLLAR):
    """Remove the normal part of ``alpha`` in the collar by a potential.

    Solves ``d_s phi + A_s phi = alpha_s`` with ``phi = 0`` on the boundary
    along each grid ray (``s = 1 - r``); the discrete equations are imposed on
    ``chi phi`` at the collar nodes where the cutoff is flat, so the normal
    part of the result vanishes there exactly.  Returns ``(h - d_A(chi phi), phi)``.
    """
    grid = h.grid
    k = pair.k
    nr, nt = grid.n_r, grid.n_theta
    s_nodes = grid.radius - grid.r
    A, _ = pair.on_grid(grid)
    As = _radial(A, grid.TH).reshape(nr, nt, k, k)
    c, sn = np.cos(grid.TH), np.sin(grid.TH)
    a_s = -(c[:, None] * h.alpha[:, 0] + sn[:, None] * h.alpha[:, 1]).reshape(nr, nt, k)

    a_lim = FLAT_FRACTION * width
    rows = np.flatnonzero(s_nodes <= a_lim + 1e-12)          # exact equations here
    unk = np.flatnonzero(s_nodes < width + 3 * grid.dr)      # unknown support
    i_min = unk[0]
    m = len(unk)
    Dr = grid.D_r[:: nt][:, ::nt].toarray()  # any theta line: same radial stencil
    if i_min <= 2:
        raise ValueError("collar reaches the pole; refine the grid")
    # equations act on chi * phi so that the correction d_A(chi phi) is exact on the rows
    Dr = Dr[np.ix_(rows, unk)] * cutoff(s_nodes[unk], width)[None, :]
    phi = np.zeros((nr, nt, k), complex)
    # smoothness functional on the unknowns: second differences
    K = np.zeros((m - 2, m))
    for q in range(m - 2):
        K[q, q:q + 3] = (1.0, -2.0, 1.0)
    eyek = np.eye(k)
    Kk = np.kron(K, eyek)
    bidx = list(unk).index(nr - 1)
    for j in range(nt):
        E = -np.kron(Dr, eyek).astype(complex)
        for q, i in enumerate(rows):
            blk = As[i, j]
            col = list(unk).index(i)
            E[q * k:(q + 1) * k, col * k:(col + 1) * k] += blk
        bc = np.zeros((k, m * k))
        bc[:, bidx * k:(bidx + 1) * k] = eyek
        E = np.vstack([E, bc])
        b = np.concatenate([a_s[rows, j].ravel(), np.zeros(k)])
        n_c = E.shape[0]
        KKT = np.block([[Kk.T @ Kk, E.conj().T], [E, np.zeros((n_c, n_c))]])
        rhs = np.concatenate([np.zeros(m * k), b])
        sol = np.linalg.lstsq(KKT, rhs, rcond=None)[0]
        phi[unk, j] = sol[: m * k].reshape(m, k)
    chi = cutoff(s_nodes, width)
    phi_flat = phi.reshape(nr * nt, k)
    psi = (np.repeat(chi, nt)[:, None] * phi_flat)
    correction = d_A(pair, psi, grid)
    return h - correction, phi_flat


def boundary_jet_gauge(pairA, pairB, width=COLLAR, tol=1e-8, n_check=256):
    """Gauge ``p = id + chi(s) s F(theta)`` with ``F = (B - A)(d/ds)`` on the circle.

    ``p`` is the identity on the boundary and its normal derivative there
    equals ``B - A`` in the normal direction, so ``gauge_transform(A, p)``
    agrees with ``B`` to first order at the boundary.
    """
    if pairA.k != pairB.k:
        raise ValueError("pairs of different rank")
    k = pairA.k
    th = np.linspace(0.0, 2 * np.pi, n_check, endpoint=False)
    xb = np.stack([np.cos(th), np.sin(th)], axis=-1)
    dA = pairB.coefficients(xb)[0] - pairA.coefficients(xb)[0]
    tang = -np.sin(th)[:, None, None] * dA[:, 0] + np.cos(th)[:, None, None] * dA[:, 1]
    if np.max(np.abs(tang)) > tol:
        raise JetMismatch(f"tangential traces differ by {np.max(np.abs(tang)):.3e}")

    def F(theta):
        xb = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        d = pairB.coefficients(xb)[0] - pairA.coefficients(xb)[0]
        return _radial(d, theta)

    h = 1e-3

    def dF(theta):
        return (-F(theta + 2 * h) + 8 * F(theta + h) - 8 * F(theta - h) + F(theta - 2 * h)) / (12 * h)

    eye = np.eye(k)

    def value(x):
        r = np.hypot(x[:, 0], x[:, 1])
        s = R_M - r
        fac = cutoff(s, width) * s
        out = np.broadcast_to(eye, (len(x), k, k)).astype(complex)
        sel = fac != 0
        if np.any(sel):
            th = np.arctan2(x[sel, 1], x[sel, 0])
            out[sel] = out[sel] + fac[sel, None, None] * F(th)
        return out

    def grad(x):
        r = np.hypot(x[:, 0], x[:, 1])
        s = R_M - r
        out = np.zeros((len(x), 2, k, k), complex)
        sel = (cutoff(s, width) > 0) & (r > 0)
        if np.any(sel):
            rr, ss = r[sel], s[sel]
            th = np.arctan2(x[sel, 1], x[sel, 0])
            fac = cutoff(ss, width) * ss
            dfac_dr = -(cutoff_deriv(ss, width) * ss + cutoff(ss, width))
            Fv, dFv = F(th), dF(th)
            c, sn = np.cos(th), np.sin(th)
            d_r = dfac_dr[:, None, None] * Fv
            d_t = fac[:, None, None] * dFv
            out[sel, 0] = c[:, None, None] * d_r - (sn / rr)[:, None, None] * d_t
            out[sel, 1] = sn[:, None, None] * d_r + (c / rr)[:, None, None] * d_t
        return out

    p = GaugeField(k, value, grad, boundary_identity=True)
    probe = PolarGrid(33, 64, R_M).points
    if p.min_abs_det(probe) < 1e-10:
        raise SingularGauge("boundary jet gauge is not invertible")
    return p
