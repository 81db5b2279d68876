"""Closed-form scalar profiles shared by metrics, pairs and gauges.

Every smooth coefficient field in the package is a finite sum of profiles

    phi(x) = exp(-w |x - c|^2) * cos(kappa . x + phase)

times constant matrices.  A profile is stored as one row
``(w, cx, cy, kx, ky, phase)`` so that both the numpy backend and the
compiled kernel can evaluate it with analytic gradients.
"""
from __future__ import annotations

import numpy as np

PROFILE_COLS = 6


def gaussian(width, center=(0.0, 0.0)):
    return np.array([width, center[0], center[1], 0.0, 0.0, 0.0])


def mode(kx, ky, phase=0.0, width=0.0, center=(0.0, 0.0)):
    """Trigonometric mode, optionally under a Gaussian envelope."""
    return np.array([width, center[0], center[1], kx, ky, phase])


def constant():
    return np.zeros(PROFILE_COLS)


def as_profiles(params):
    params = np.asarray(params, dtype=float)
    if params.size == 0:
        return np.zeros((0, PROFILE_COLS))
    params = np.atleast_2d(params)
    if params.shape[1] != PROFILE_COLS:
        raise ValueError(f"profiles need {PROFILE_COLS} columns, got {params.shape[1]}")
    return np.ascontiguousarray(params)


def evaluate(params, x, grad=False):
    """Evaluate all profiles at points ``x`` of shape (n, 2).

    Returns ``phi`` of shape (n, T) and, with ``grad=True``, also the
    gradient of shape (n, T, 2).
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    T = params.shape[0]
    if T == 0:
        phi = np.zeros((n, 0))
        return (phi, np.zeros((n, 0, 2))) if grad else phi
    w = params[:, 0]
    dx = x[:, None, 0] - params[None, :, 1]
    dy = x[:, None, 1] - params[None, :, 2]
    env = np.exp(-w * (dx * dx + dy * dy))
    arg = x[:, None, 0] * params[:, 3] + x[:, None, 1] * params[:, 4] + params[:, 5]
    cs = np.cos(arg)
    phi = env * cs
    if not grad:
        return phi
    sn = np.sin(arg)
    g = np.empty((n, T, 2))
    g[..., 0] = env * (-2.0 * w * dx * cs - params[:, 3] * sn)
    g[..., 1] = env * (-2.0 * w * dy * cs - params[:, 4] * sn)
    return phi, g


def sample_cartesian(radius, spacing):
    """Square lattice covering the disk of the given radius (for norm meters)."""
    m = int(np.ceil(radius / spacing))
    s = np.arange(-m, m + 1) * spacing
    X, Y = np.meshgrid(s, s, indexing="ij")
    return X, Y


def ck_norm(func, radius, order, spacing=0.02):
    """Finite-difference C^order norm of a field on a disk.

    ``func`` maps points (n, 2) to arrays (n, ...).  Derivatives are taken by
    repeated central differences on a square lattice; the norm is the max
    absolute value over all derivatives of order <= ``order`` at lattice
    points inside the disk (with a margin so that stencils stay inside).
    """
    X, Y = sample_cartesian(radius + (order + 1) * spacing, spacing)
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    vals = np.asarray(func(pts))
    vals = vals.reshape(X.shape + vals.shape[1:])
    inside = X ** 2 + Y ** 2 <= radius ** 2
    best = 0.0
    level = [vals]
    for m in range(order + 1):
        for arr in level:
            best = max(best, float(np.max(np.abs(arr[inside]))))
        if m == order:
            break
        nxt = []
        for arr in level:
            nxt.append(np.gradient(arr, spacing, axis=0))
        nxt.append(np.gradient(level[-1], spacing, axis=1))
        level = nxt
    return best
