"""Vectorised RK4 ray integrator (pure numpy).

All rays of a batch advance together; rays that cross a boundary radius
inside a step have that step shortened to the crossing, located by
bisection on the geodesic part of the state.  The geodesic part never
depends on the transport matrices, so the step schedule is identical whether
or not transport is switched on.
"""
from __future__ import annotations

import numpy as np

BISECT_ITERS = 52

OK, TRAPPED, DIVERGED = 0, 1, 2


def _geo_step(accel, x, v, h):
    h = h[:, None]
    k1x, k1v = v, accel(x, v)
    x2, v2 = x + 0.5 * h * k1x, v + 0.5 * h * k1v
    k2x, k2v = v2, accel(x2, v2)
    x3, v3 = x + 0.5 * h * k2x, v + 0.5 * h * k2v
    k3x, k3v = v3, accel(x3, v3)
    x4, v4 = x + h * k3x, v + h * k3v
    k4x, k4v = v4, accel(x4, v4)
    xn = x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    vn = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return xn, vn, (x, v, x2, v2, x3, v3, x4, v4)


def _matrix_step(att, stages, U, W, h):
    """RK4 for dU = -M U and dW = W M along precomputed geodesic stages."""
    x1, v1, x2, v2, x3, v3, x4, v4 = stages
    M1, M2, M3, M4 = att(x1, v1), att(x2, v2), att(x3, v3), att(x4, v4)
    h = h[:, None, None]
    k1 = -M1 @ U
    k2 = -M2 @ (U + 0.5 * h * k1)
    k3 = -M3 @ (U + 0.5 * h * k2)
    k4 = -M4 @ (U + h * k3)
    Un = U + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    j1 = W @ M1
    j2 = (W + 0.5 * h * j1) @ M2
    j3 = (W + 0.5 * h * j2) @ M3
    j4 = (W + h * j3) @ M4
    Wn = W + h / 6.0 * (j1 + 2.0 * j2 + 2.0 * j3 + j4)
    return Un, Wn


def trace(accel, att, rank, x0, v0, *, dt, r_out, r_event=0.0, record=False,
          record_U=False, max_len=100.0):
    """Integrate a batch of rays until they leave the disk of radius ``r_out``.

    Parameters
    ----------
    accel : callable (x, v) -> geodesic acceleration, arrays (m, 2)
    att : callable (x, v) -> attenuation matrices (m, r, r), or None
    rank : int
        Matrix size r (ignored when ``att`` is None).
    r_event : float
        If positive, samples are recorded only between entering and leaving
        the disk of this radius, and both crossings are located exactly.

    Returns
    -------
    dict with per-ray ``status``, ``tau``, ``x``, ``v``, ``U``, ``W``,
    ``entered``, and, when recording, ragged ``offsets``, ``rec_t``,
    ``rec_x``, ``rec_v``, ``rec_W`` (and ``rec_U``).
    """
    x0 = np.ascontiguousarray(x0, dtype=float)
    v0 = np.ascontiguousarray(v0, dtype=float)
    n = x0.shape[0]
    transport = att is not None
    x, v = x0.copy(), v0.copy()
    t = np.zeros(n)
    status = np.zeros(n, dtype=np.int8)
    if transport:
        eye = np.eye(rank, dtype=complex)
        U = np.broadcast_to(eye, (n, rank, rank)).copy()
        W = U.copy()
    else:
        U = W = None
    use_event = r_event > 0
    phase = np.zeros(n, dtype=np.int8) if use_event else np.ones(n, dtype=np.int8)
    entered = phase == 1
    ro2 = r_out * r_out
    re2 = r_event * r_event

    recs = []

    def _record(ids):
        if not record or ids.size == 0:
            return
        item = [ids, t[ids].copy(), x[ids].copy(), v[ids].copy()]
        if transport:
            item.append(W[ids].copy())
            item.append(U[ids].copy() if record_U else None)
        recs.append(item)

    _record(np.flatnonzero(phase == 1))
    active = np.arange(n)
    while active.size:
        ids = active
        xa, va = x[ids], v[ids]
        h = np.full(ids.size, dt)
        xn, vn, stages = _geo_step(accel, xa, va, h)
        r2 = np.einsum("ni,ni->n", xn, xn)
        ph = phase[ids]
        exit_m = r2 > ro2
        if use_event:
            enter_m = (ph == 0) & (r2 < re2) & ~exit_m
            leave_m = (ph == 1) & (r2 > re2) & ~exit_m
        else:
            enter_m = leave_m = np.zeros(ids.size, dtype=bool)
        cross = exit_m | enter_m | leave_m
        if np.any(cross):
            c = np.flatnonzero(cross)
            rho2 = np.where(exit_m[c], ro2, re2)
            sgn = np.where(enter_m[c], -1.0, 1.0)
            lo = np.zeros(c.size)
            hi = np.full(c.size, dt)
            xc, vc = xa[c], va[c]
            for _ in range(BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                xm, _, _ = _geo_step(accel, xc, vc, mid)
                F = sgn * (np.einsum("ni,ni->n", xm, xm) - rho2)
                pos = F > 0
                hi = np.where(pos, mid, hi)
                lo = np.where(pos, lo, mid)
            h[c] = hi
            xs, vs, st_c = _geo_step(accel, xc, vc, hi)
            xn[c], vn[c] = xs, vs
            stages = tuple(s.copy() for s in stages)
            for s_full, s_c in zip(stages, st_c):
                s_full[c] = s_c
        if transport:
            Un, Wn = _matrix_step(att, stages, U[ids], W[ids], h)
            U[ids], W[ids] = Un, Wn
        x[ids], v[ids] = xn, vn
        t[ids] += h
        bad = ~np.all(np.isfinite(xn), axis=1) | ~np.all(np.isfinite(vn), axis=1)
        if transport:
            bad |= ~np.all(np.isfinite(U[ids].reshape(ids.size, -1)), axis=1)
        rec_m = (ph == 1) | enter_m
        phase[ids[enter_m]] = 1
        entered[ids[enter_m]] = True
        phase[ids[leave_m]] = 2
        _record(ids[rec_m & ~bad])
        trapped = t[ids] > max_len
        status[ids[bad]] = DIVERGED
        status[ids[trapped & ~bad]] = TRAPPED
        finished = exit_m | bad | trapped
        active = ids[~finished]

    out = {"status": status, "tau": t, "x": x, "v": v, "U": U, "W": W,
           "entered": entered}
    if record:
        out.update(_pack(recs, n, transport, record_U, rank))
    return out


def _pack(recs, n, transport, record_U, rank):
    if not recs:
        ids = np.zeros(0, dtype=int)
        out = {"offsets": np.zeros(n + 1, dtype=np.int64), "rec_t": np.zeros(0),
               "rec_x": np.zeros((0, 2)), "rec_v": np.zeros((0, 2))}
        if transport:
            out["rec_W"] = np.zeros((0, rank, rank), complex)
            if record_U:
                out["rec_U"] = np.zeros((0, rank, rank), complex)
        return out
    ids = np.concatenate([r[0] for r in recs])
    order = np.argsort(ids, kind="stable")
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(ids, minlength=n), out=offsets[1:])
    out = {
        "offsets": offsets,
        "rec_t": np.concatenate([r[1] for r in recs])[order],
        "rec_x": np.concatenate([r[2] for r in recs])[order],
        "rec_v": np.concatenate([r[3] for r in recs])[order],
    }
    if transport:
        out["rec_W"] = np.concatenate([r[4] for r in recs])[order]
        if record_U:
            out["rec_U"] = np.concatenate([r[5] for r in recs])[order]
    return out
