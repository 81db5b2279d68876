"""Attenuated ray transforms, the fiber-integral adjoint and the normal operator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._kernels import trace_rays
from .errors import RayMissesM, SingularWeight
from .gauge import PairField, pair_norms
from .geometry import DT, FanBeamGrid, PhasePoint, check_batch, fan_coordinates
from .transport import fan_interp_matrix

N_DIR = 128
DT_ADJOINT = 1.0 / 32


@dataclass
class Sinogram:
    """Transform values on a fan grid, shape (n_beta, n_alpha, K)."""

    grid: FanBeamGrid
    values: np.ndarray
    domain: str = "M1"

    @property
    def k(self):
        return self.values.shape[-1]

    def flat(self):
        return self.values.reshape(self.grid.size, -1)

    def inner(self, other):
        """``<self, other>`` in ``L^2_mu`` (conjugate-linear in ``other``)."""
        return np.sum(self.grid.mu[..., None] * self.values * np.conj(other.values))

    def norm(self):
        return float(np.sqrt(np.real(self.inner(self))))

    def __add__(self, o):
        return Sinogram(self.grid, self.values + o.values, self.domain)

    def __sub__(self, o):
        return Sinogram(self.grid, self.values - o.values, self.domain)

    def __mul__(self, c):
        return Sinogram(self.grid, c * self.values, self.domain)

    __rmul__ = __mul__


def _trapezoid(offsets, t):
    """Sparse (n_rays, n_samples) trapezoid weights from ragged sample times."""
    n = len(offsets) - 1
    m = len(t)
    w = np.zeros(m)
    if m:
        dt_next = np.zeros(m)
        dt_next[:-1] = np.diff(t)
        last = offsets[1:] - 1
        valid = offsets[1:] > offsets[:-1]
        dt_next[last[valid]] = 0.0
        w += 0.5 * dt_next
        w[1:] += 0.5 * dt_next[:-1]
    ids = np.repeat(np.arange(n), np.diff(offsets))
    return sp.csr_matrix((w, (ids, np.arange(m))), shape=(n, m))


class ForwardModel:
    """Recorded rays with their weights, ready to integrate pair fields.

    Parameters
    ----------
    pair : AttenuationPair or None
        Pair whose ``W`` weights the integrand (``None`` means ``W = id``).
    x0, v0 : arrays (n, 2)
        Start phase points on the outer circle ``r_out``.
    r_event : float
        Integrand support radius; samples are taken only inside it.
    """

    def __init__(self, pair, metric, x0, v0, r_out, r_event=0.0, dt=DT, backend=None,
                 weight=None):
        # no reference back to the pair: this object lives in the pair's cache
        self.metric, self.dt = metric, dt
        b = trace_rays(metric, pair, x0, v0, dt=dt, r_out=r_out, r_event=r_event,
                       record=True, backend=backend)
        check_batch(b)
        self.batch = b
        self.n = b.n
        self.x, self.v, self.t = b.rec_x, b.rec_v, b.rec_t
        if weight is not None:
            self.W = np.asarray(weight(self.x, self.v), dtype=complex)
            dets = np.abs(np.linalg.det(self.W)) if len(self.W) else np.ones(1)
            if np.min(dets, initial=np.inf) < 1e-10:
                raise SingularWeight("weight matrix is singular at some sample")
        else:
            self.W = b.rec_W
        self.S = _trapezoid(b.offsets, self.t)
        self._interp = {}

    def interp(self, grid):
        if grid not in self._interp:
            self._interp[grid] = grid.interp_matrix(self.x)
        return self._interp[grid]

    def integrand(self, h):
        """Values ``alpha(v) + f`` at the samples; ``h`` is a PairField or a callable."""
        if isinstance(h, PairField):
            I = self.interp(h.grid)
            a0 = I @ h.alpha[:, 0]
            a1 = I @ h.alpha[:, 1]
            f = I @ h.f
        else:
            a, f = h(self.x)
            a0, a1 = a[:, 0], a[:, 1]
        return a0 * self.v[:, 0, None] + a1 * self.v[:, 1, None] + f

    def apply(self, h):
        """Transform values per ray, shape (n, K)."""
        val = self.integrand(h)
        if self.W is not None:
            val = np.einsum("mij,mj->mi", self.W, val)
        return self.S @ val


def _fan_model(pair, metric, fan, domain, dt, backend, weight=None):
    x0, v0 = fan.flat()
    r_event = metric.r_M if fan.radius > metric.r_M + 1e-12 else 0.0
    return ForwardModel(pair, metric, x0, v0, fan.radius, r_event, dt, backend, weight)


def forward_model(pair, metric, fan, dt=DT, backend=None):
    """Cached :class:`ForwardModel` over all nodes of ``fan``."""
    key = ("fwd", id(metric), id(fan), dt)
    cache = _cache_of(pair)
    if key not in cache:
        cache[key] = (metric, fan, _fan_model(pair, metric, fan, None, dt, backend))
    return cache[key][2]


_NONE_CACHE = {}


def _cache_of(pair):
    return _NONE_CACHE if pair is None else pair.__dict__.setdefault("_xray_cache", {})


def forward_pair(pair, metric, h, grid, domain="M1", dt=DT, backend=None):
    """``I_A h`` (or its extended version on M1) over a fan grid."""
    model = forward_model(pair, metric, grid, dt, backend)
    vals = model.apply(h)
    return Sinogram(grid, vals.reshape(grid.shape + (-1,)), domain)


def forward_function(weight, metric, f, grid, dt=DT, backend=None):
    """``I_W f = int W f dt`` with ``W`` from a pair or an explicit callable ``(x, v) -> W``."""
    from .gauge import AttenuationPair

    if isinstance(f, PairField):
        h = PairField(f.grid, np.zeros_like(f.alpha), f.f)
    elif callable(f):
        def h(x, _f=f):
            vals = np.asarray(_f(x))
            vals = vals.reshape(len(x), -1)
            return np.zeros((len(x), 2, vals.shape[1])), vals
    else:
        raise TypeError("f must be a PairField or a callable")
    if weight is None or isinstance(weight, AttenuationPair):
        model = forward_model(weight, metric, grid, dt, backend)
    else:
        model = _fan_model(None, metric, grid, None, dt, backend, weight=weight)
    vals = model.apply(h)
    return Sinogram(grid, vals.reshape(grid.shape + (-1,)), "M1" if grid.radius > 1 else "M")


def extension_factor(pair, metric, entry_M1, dt=DT, backend=None):
    """``C(gamma) = W~ W^{-1}`` at the first entry of an M1-ray into M.

    Returns ``(C, entry_point)`` where the entry point is a PhasePoint on the
    unit circle; ``C`` has shape (k, k) for a single ray or (n, k, k).
    """
    x0 = np.atleast_2d(entry_M1.x)
    v0 = np.atleast_2d(entry_M1.v)
    b = trace_rays(metric, pair, x0, v0, dt=dt, r_out=metric.r_M1, r_event=metric.r_M,
                   record=True, backend=backend)
    check_batch(b)
    if not np.all(b.entered):
        raise RayMissesM("ray does not meet M")
    first = b.offsets[:-1]
    C = b.rec_W[first]
    ent = PhasePoint(b.rec_x[first], b.rec_v[first])
    if np.ndim(entry_M1.x) == 1:
        return C[0], PhasePoint(ent.x[0], ent.v[0])
    return C, ent


# --------------------------------------------------------------------------
# adjoint
# --------------------------------------------------------------------------
def unique_nodes(grid):
    """One representative per distinct grid point (a single pole node)."""
    return np.concatenate([[0], np.arange(grid.n_theta, grid.size)])


def expand_unique(grid, vals):
    out = np.empty((grid.size,) + vals.shape[1:], dtype=vals.dtype)
    out[: grid.n_theta] = vals[0]
    out[grid.n_theta:] = vals[1:]
    return out


class AdjointTable:
    """Backward rays from every grid node and direction to the outer fan.

    ``I^* u (x) = (2 pi / n_dir) sum_d W~(x, v_d)^* u^sharp(x, v_d)`` for the
    function part; the 1-form part carries the extra factor ``g v_d``.  An
    explicit ``weight`` callable ``(x, v) -> W`` replaces the pair weight.
    """

    def __init__(self, pair, metric, fan, grid, n_dir=N_DIR, dt=DT_ADJOINT, backend=None,
                 weight=None):
        self.metric, self.fan, self.grid = metric, fan, grid
        self.n_dir = n_dir
        nodes = unique_nodes(grid)
        x = grid.points[nodes]
        fr = metric.frame(x)
        th = 2.0 * np.pi * np.arange(n_dir) / n_dir
        v = (np.cos(th)[None, :, None] * fr[:, None, 0] + np.sin(th)[None, :, None] * fr[:, None, 1])
        X = np.repeat(x, n_dir, axis=0)
        V = v.reshape(-1, 2)
        b = trace_rays(metric, pair, X, -V, dt=dt, r_out=fan.radius, phi_sign=-1.0,
                       backend=backend)
        check_batch(b)
        beta, alpha = fan_coordinates(metric, fan.radius, b.x, -b.v)
        self.B = fan_interp_matrix(fan, beta, alpha)
        if weight is not None:
            W = np.asarray(weight(X, V), dtype=complex)
            self.Wh = np.conj(np.swapaxes(W, -1, -2))
        else:
            self.Wh = None if pair is None else np.conj(np.swapaxes(b.U, -1, -2))
        self.cov = np.einsum("nij,nj->ni", metric.g(X), V)
        self.n_nodes = len(nodes)

    def apply(self, u):
        """Backproject a boundary table (n_beta, n_alpha, K) or Sinogram to a PairField."""
        vals = u.values if isinstance(u, Sinogram) else np.asarray(u)
        flat = vals.reshape(self.fan.size, -1)
        K = flat.shape[1]
        us = self.B @ flat
        if self.Wh is not None:
            us = np.einsum("mij,mj->mi", self.Wh, us)
        w = 2.0 * np.pi / self.n_dir
        us = us.reshape(self.n_nodes, self.n_dir, K)
        cov = self.cov.reshape(self.n_nodes, self.n_dir, 2)
        f = w * us.sum(axis=1)
        a = w * np.einsum("ndi,ndk->nik", cov, us)
        return PairField(self.grid, expand_unique(self.grid, a), expand_unique(self.grid, f))


def adjoint_table(pair, metric, fan, grid, n_dir=N_DIR, dt=DT_ADJOINT, backend=None):
    key = ("adj", id(metric), id(fan), grid, n_dir, dt)
    cache = _cache_of(pair)
    if key not in cache:
        cache[key] = (metric, fan, AdjointTable(pair, metric, fan, grid, n_dir, dt, backend))
    return cache[key][2]


def adjoint_backproject(pair, metric, u, grid, n_dir=N_DIR, dt=DT_ADJOINT, backend=None):
    """``I^*_A u`` on ``grid`` for a sinogram ``u`` on the outer fan grid."""
    return adjoint_table(pair, metric, u.grid, grid, n_dir, dt, backend).apply(u)


def normal_operator(pair, metric, h, fan, grid_out, n_dir=N_DIR, dt=DT, dt_adj=DT_ADJOINT,
                    backend=None):
    """``N_A h = I~^* I~ h`` evaluated on ``grid_out``."""
    s = forward_pair(pair, metric, h, fan, "M1", dt, backend)
    return adjoint_backproject(pair, metric, s, grid_out, n_dir, dt_adj, backend)


def h1_norm_M1(field, metric):
    """``H^1`` norm on the grid of ``field`` (the M1 grid for normal-operator outputs)."""
    return pair_norms(field, metric, "H1")
