"""Pseudolinearization: the hat system, its data, linear inversion and gauge recovery.

Matrices are flattened column-major, ``vec(X)[i + k j] = X[i, j]``, so that
``vec(B X - X A) = (I (x) B - A^T (x) I) vec(X)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import decomp
from ._kernels import trace_rays
from .errors import GaugeInconsistent, SingularData, StagnationWarning
from .gauge import (CallablePair, GaugeField, PairField, TermPair, boundary_jet_gauge,
                    gauge_transform, pair_norms)
from .geometry import DT, check_batch
from .transport import boundary_h1, scattering_data, weight_at
from .xray import (DT_ADJOINT, N_DIR, AdjointTable, ForwardModel, Sinogram, adjoint_table,
                   forward_model)


def vec(X):
    """Column-major flattening of the trailing (k, k) axes."""
    X = np.asarray(X)
    return np.swapaxes(X, -1, -2).reshape(X.shape[:-2] + (-1,))


def unvec(v, k):
    v = np.asarray(v)
    return np.swapaxes(v.reshape(v.shape[:-1] + (k, k)), -1, -2)


def _hat_matrix(MA, MB):
    k = MA.shape[-1]
    eye = np.eye(k)
    kron = lambda a, b: np.einsum("...ij,...kl->...ikjl", a, b).reshape(  # noqa: E731
        a.shape[:-2] + (a.shape[-2] * b.shape[-2], a.shape[-1] * b.shape[-1]))
    return kron(np.broadcast_to(eye, MB.shape), MB) - kron(np.swapaxes(MA, -1, -2),
                                                          np.broadcast_to(eye, MA.shape))


def hat_pair(pairA, pairB):
    """Pair on ``C^{k^2}`` acting by ``vec(X) -> vec(B X - X A)``."""
    if pairA.k != pairB.k:
        raise ValueError("pairs of different rank")
    k = pairA.k
    if isinstance(pairA, TermPair) and isinstance(pairB, TermPair):
        zA = np.zeros_like(pairA.coef)
        zB = np.zeros_like(pairB.coef)
        cB = _hat_matrix(zB, pairB.coef)
        cA = _hat_matrix(pairA.coef, zA)
        return TermPair(np.vstack([pairB.profiles, pairA.profiles]), np.concatenate([cB, cA]),
                        k=k * k)

    def func(x):
        A1, P1 = pairA.coefficients(x)
        A2, P2 = pairB.coefficients(x)
        return _hat_matrix(A1, A2), _hat_matrix(P1, P2)

    return CallablePair(k * k, func)


def pair_difference_integrand(pairB, pairA):
    """Callable ``x -> (alpha, f)`` for the k^2-valued pair field ``vec(B - A)``."""

    def func(x):
        A1, P1 = pairA.coefficients(x)
        A2, P2 = pairB.coefficients(x)
        return vec(A2 - A1), vec(P2 - P1)

    return func


@dataclass
class HatSystem:
    pairA: object
    pairB: object
    metric: object
    hat: object
    flow_residual: float = field(default=np.nan)

    @property
    def k(self):
        return self.pairA.k

    @property
    def hat_rank(self):
        return self.k ** 2

    def attenuation(self, x, v):
        return self.hat.att(np.atleast_2d(x), np.atleast_2d(v))

    def weight(self, x, v, domain="M1"):
        """``W_hat = U_A^T (x) W_B`` at phase points (through the hat integration)."""
        from .geometry import PhasePoint

        return weight_at(self.hat, self.metric, PhasePoint(x, v), domain)


def _flow_residual(hat, pairA, pairB, metric, n_rays=5, seed=0, dt=DT):
    """Relative residual of ``X W_hat = W_hat A_hat`` along seeded rays (central differences)."""
    rng = np.random.default_rng(seed)
    beta = rng.uniform(0, 2 * np.pi, n_rays)
    alpha = rng.uniform(-1.2, 1.2, n_rays)
    xb, fr = metric.boundary_frame(beta, metric.r_M1)
    v = np.cos(alpha)[:, None] * fr[:, 0] + np.sin(alpha)[:, None] * fr[:, 1]
    worst = 0.0
    k = pairA.k
    for i in range(n_rays):
        bA = trace_rays(metric, pairA, xb[i:i + 1], v[i:i + 1], dt=dt, r_out=metric.r_M1,
                        record=True, record_U=True)
        bB = trace_rays(metric, pairB, xb[i:i + 1], v[i:i + 1], dt=dt, r_out=metric.r_M1,
                        record=True)
        UA, WB = bA.rec_U[:-1], bB.rec_W[:-1]
        t = bA.rec_t[:-1]
        What = np.swapaxes(UA, -1, -2)[:, :, None, :, None] * WB[:, None, :, None, :]
        What = What.reshape(len(t), k * k, k * k)
        Ahat = hat.att(bA.rec_x[:-1], bA.rec_v[:-1])
        dW = (What[2:] - What[:-2]) / (t[2:] - t[:-2])[:, None, None]
        rhs = What[1:-1] @ Ahat[1:-1]
        scale = max(np.max(np.abs(rhs)), np.max(np.abs(What)))
        worst = max(worst, float(np.max(np.abs(dW - rhs)) / scale))
    return worst


def hat_system(pairA, pairB, metric, verify=True):
    """Build the flattened system and spot-check ``X W_hat = W_hat A_hat``."""
    hat = hat_pair(pairA, pairB)
    res = _flow_residual(hat, pairA, pairB, metric) if verify else np.nan
    return HatSystem(pairA, pairB, metric, hat, res)


def pseudolin_sinogram(dataA, dataB):
    """``vec(C_B^{-1} C_A - id)`` per node."""
    if not dataA.grid.same_nodes(dataB.grid):
        raise ValueError("scattering data on different fan grids")
    CB = dataB.C
    if np.min(np.abs(np.linalg.det(CB))) < 1e-12:
        raise SingularData("C_B is numerically singular")
    k = dataA.k
    M = np.linalg.solve(CB, dataA.C) - np.eye(k)
    return Sinogram(dataA.grid, vec(M), "M" if dataA.grid.radius <= 1.0 + 1e-12 else "M1")


# --------------------------------------------------------------------------
# linear inversion
# --------------------------------------------------------------------------
@dataclass
class Reconstruction:
    h: PairField
    residuals: list
    iterations: int
    converged: bool


class LinearProblem:
    """Forward ``I~`` (M grid -> M1 fan) and fiber-integral adjoint (M1 fan -> M grid).

    With an explicit ``weight`` callable ``(x, v) -> W`` (rank ``k``) the pair
    is ignored for transport and the problem is usually solved on functions.
    """

    def __init__(self, pair, metric, fan, grid, n_dir=N_DIR, dt=DT, dt_adj=DT_ADJOINT,
                 weight=None, backend=None, k=None):
        self.pair, self.metric, self.fan, self.grid = pair, metric, fan, grid
        if weight is None:
            self.fwd = forward_model(pair, metric, fan, dt, backend)
            self.adj = adjoint_table(pair, metric, fan, grid, n_dir, dt_adj, backend)
        else:
            x0, v0 = fan.flat()
            r_event = metric.r_M if fan.radius > metric.r_M + 1e-12 else 0.0
            self.fwd = ForwardModel(None, metric, x0, v0, fan.radius, r_event, dt, backend,
                                    weight)
            self.adj = AdjointTable(None, metric, fan, grid, n_dir, dt_adj, backend, weight)
        self.k = k if k is not None else (pair.k if pair is not None else 1)

    def forward(self, h):
        return Sinogram(self.fan, self.fwd.apply(h).reshape(self.fan.shape + (-1,)), "M1")

    def adjoint(self, u):
        return self.adj.apply(u)


def linear_reconstruct(problem, data, max_iter=100, tol=1e-3, project=True,
                       functions_only=False, x0=None):
    """Conjugate gradients on the normal equations with solenoidal re-projection.

    Each search direction (and hence every iterate) is projected by the
    solenoidal splitting of the problem's pair; ``functions_only`` restricts
    the unknown to the function part.  Stops when ``|r| / |data| < tol``.
    """
    pair, metric, grid = problem.pair, problem.metric, problem.grid
    K = data.k

    def P(h):
        if functions_only:
            h = PairField(grid, np.zeros_like(h.alpha), h.f)
        elif project:
            h = decomp.split(pair, metric, h).h_s
        return h.masked(np.ones(grid.size))

    def ip(a, b):
        from .gauge import inner

        return float(np.real(inner(a, b, metric)))

    nd = data.norm()
    h = PairField.zeros(grid, K) if x0 is None else x0
    if nd == 0:
        return Reconstruction(h, [0.0], 1, True)
    r = data - problem.forward(h) if x0 is not None else data
    s = P(problem.adjoint(r))
    p = s
    gamma = ip(s, s)
    hist = [r.norm() / nd]
    best = (hist[0], h)
    it = 0
    converged = hist[-1] < tol
    while it < max_iter and not converged:
        it += 1
        q = problem.forward(p)
        qq = q.norm() ** 2
        if qq == 0 or gamma == 0:
            break
        a = gamma / qq
        h = h + a * p
        r = r - a * q
        hist.append(r.norm() / nd)
        if hist[-1] < best[0]:
            best = (hist[-1], h)
        if hist[-1] < tol:
            converged = True
            break
        s = P(problem.adjoint(r))
        g_new = ip(s, s)
        p = s + (g_new / gamma) * p
        gamma = g_new
    if not converged:
        warnings.warn(f"residual stalled at {best[0]:.3e} after {it} iterations", StagnationWarning)
    return Reconstruction(h, hist, it, converged)


# --------------------------------------------------------------------------
# gauge recovery
# --------------------------------------------------------------------------
def _incoming_dirs(metric, x, alpha_dir):
    """Unit vectors at ``x`` making angle ``alpha_dir`` with the outward radial direction."""
    r = np.hypot(x[:, 0], x[:, 1])
    th = np.arctan2(x[:, 1], x[:, 0])
    th = np.where(r > 0, th, 0.0)
    ang = th + alpha_dir
    v = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    return v / metric.norm(x, v)[:, None]


def gauge_integrate(pairA, pairB, metric, grid, dirs=(0.0, np.pi / 2), dt=DT, tol=1e-6,
                    backend=None, raise_on_mismatch=True):
    """Recover ``p`` with ``B = p^{-1} d_A p`` from transport along geodesics in M.

    For each node ``x`` a geodesic through ``x`` is traced back to the unit
    circle and ``u = U_B W_A`` is integrated forward from ``u = id``, which
    solves ``X u + B u - u A = 0``; then ``p = u^{-1}``.  The computation is
    repeated for a second direction and the maximal discrepancy reported.
    """
    x = grid.points
    results = []
    for ang in dirs:
        v = _incoming_dirs(metric, x, ang)
        bA = trace_rays(metric, pairA, x, -v, dt=dt, r_out=metric.r_M, phi_sign=-1.0,
                        backend=backend)
        bB = trace_rays(metric, pairB, x, -v, dt=dt, r_out=metric.r_M, phi_sign=-1.0,
                        backend=backend)
        check_batch(bA)
        check_batch(bB)
        # reversed-ray fundamental matrix = forward W; so W_A = bA.U and U_B = inv(bB.U)
        WA = bA.U
        UB = np.linalg.inv(bB.U)
        results.append(UB @ WA)
    u = results[0]
    disc = 0.0
    for other in results[1:]:
        disc = max(disc, float(np.max(np.abs(other - u))))
    p = np.linalg.inv(u)
    gauge = GaugeField.from_grid(grid, p, boundary_identity=True)
    gauge.discrepancy = disc
    if raise_on_mismatch and disc > tol:
        raise GaugeInconsistent(f"direction discrepancy {disc:.3e} exceeds {tol:.1e}",
                                discrepancy=disc, gauge=gauge)
    return gauge


def gauge_distance(pairA, pairB, metric, grid):
    """Distance from ``B`` to the gauge orbit of ``A`` to first order.

    ``A`` is first moved by the boundary jet gauge so that both pairs share
    their boundary jet; the remaining difference ``vec(B - A')`` is split
    under the flattened pair and its solenoidal part measured in ``L^2(M)``.
    """
    pj = boundary_jet_gauge(pairA, pairB)
    Aj = gauge_transform(pairA, pj)
    hat = hat_pair(Aj, pairB)
    a, f = pair_difference_integrand(pairB, Aj)(grid.points)
    return pair_norms(decomp.solenoidal(hat, metric, PairField(grid, a, f)), metric)


@dataclass
class StabilityReport:
    """Both sides of the stability estimate along ``B_t = A + t (B_0 - A_0)``."""

    rows: list
    spread: float


def nonlinear_stability_probe(pairA0, pairB0, metric, ts, grid, fan, dt=DT, backend=None):
    """Ratio of gauge distance to the ``H^1`` scattering-data distance for each ``t``.

    The perturbation ``B_0 - A_0`` should have vanishing tangential trace on
    the unit circle.  At ``t = 0`` both sides vanish and the ratio is ``None``;
    ``spread`` is max/min of the remaining ratios.
    """
    pert = pairB0 - pairA0
    CA = scattering_data(pairA0, metric, fan, dt, backend).C
    rows = []
    for t in ts:
        if t == 0:
            rows.append({"t": 0.0, "gauge_distance": 0.0, "data_h1": 0.0, "ratio": None})
            continue
        Bt = pairA0 + pert.scaled(t)
        num = gauge_distance(pairA0, Bt, metric, grid)
        den = boundary_h1(fan, scattering_data(Bt, metric, fan, dt, backend).C - CA)
        rows.append({"t": float(t), "gauge_distance": num, "data_h1": den,
                     "ratio": num / den if den > 0 else None})
    r = [row["ratio"] for row in rows if row["ratio"] is not None]
    spread = float(max(r) / min(r)) if r else 1.0
    return StabilityReport(rows, spread)
