"""Reduction of complex rank-k transforms to real rank-2k ones.

A complex matrix ``W = W_r + i W_i`` becomes ``[[W_r, -W_i], [W_i, W_r]]``
and a complex vector ``h`` becomes ``(h_r, h_i)``.
"""
from __future__ import annotations

import numpy as np

from .gauge import CallablePair, PairField, TermPair


def realify_weight(W):
    """Block form ``[[Re W, -Im W], [Im W, Re W]]`` on the trailing (k, k) axes."""
    W = np.asarray(W)
    Wr, Wi = W.real, W.imag
    top = np.concatenate([Wr, -Wi], axis=-1)
    bot = np.concatenate([Wi, Wr], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def stack_vector(h):
    """``(h_r, h_i)`` on the last axis."""
    h = np.asarray(h)
    return np.concatenate([h.real, h.imag], axis=-1)


def unstack_vector(hr):
    hr = np.asarray(hr)
    k = hr.shape[-1] // 2
    return hr[..., :k] + 1j * hr[..., k:]


def realify_pair(pair):
    if isinstance(pair, TermPair):
        return TermPair(pair.profiles, realify_weight(pair.coef).astype(complex), k=2 * pair.k)

    def func(x):
        A, Phi = pair.coefficients(x)
        return realify_weight(A).astype(complex), realify_weight(Phi).astype(complex)

    return CallablePair(2 * pair.k, func)


def realify_field(h):
    return PairField(h.grid, stack_vector(h.alpha), stack_vector(h.f))


def realify_system(pair, h):
    """Rank-2k real pair and the stacked real pair field."""
    return realify_pair(pair), realify_field(h)


def equivalence_check(pair, metric, h, grid, dt=None, backend=None):
    """Compare ``I_A h`` (complex) with the realified transform of ``(h_r, h_i)``."""
    from .geometry import DT
    from .xray import forward_pair

    dt = DT if dt is None else dt
    rp, rh = realify_system(pair, h)
    Ic = forward_pair(pair, metric, h, grid, "M1" if grid.radius > 1 else "M", dt, backend)
    Ir = forward_pair(rp, metric, rh, grid, "M1" if grid.radius > 1 else "M", dt, backend)
    ref = stack_vector(Ic.values)
    mism = float(np.max(np.abs(Ir.values - ref), initial=0.0))
    imag = float(np.max(np.abs(Ir.values.imag), initial=0.0))
    return {"max_mismatch": mism, "max_imag_residue": imag,
            "scale": float(np.max(np.abs(ref), initial=0.0))}
