"""Ray-integration backends.

The compiled extension ``_core`` handles parametric metrics and pairs (term
tables); the numpy backend handles everything, including pairs given by
arbitrary callables.  ``GAUGETOMO_BACKEND=numpy`` forces the fallback.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _numpy_backend

try:
    from . import _core
except ImportError:  # pragma: no cover - depends on the build
    _core = None

OK, TRAPPED, DIVERGED = _numpy_backend.OK, _numpy_backend.TRAPPED, _numpy_backend.DIVERGED
_CAPACITY = 3


def available():
    """Names of the usable backends, preferred first."""
    names = ["numpy"]
    if _core is not None:
        names.insert(0, "compiled")
    return names


def default_backend():
    forced = os.environ.get("GAUGETOMO_BACKEND", "").strip().lower()
    if forced in ("numpy", "python"):
        return "numpy"
    return available()[0]


@dataclass
class RayBatch:
    """Result of integrating a batch of rays.

    Per-ray arrays have leading length ``n``; recorded samples are ragged and
    indexed through ``offsets`` (ray ``i`` owns ``offsets[i]:offsets[i+1]``).
    """

    status: np.ndarray
    tau: np.ndarray
    x: np.ndarray
    v: np.ndarray
    U: np.ndarray | None
    W: np.ndarray | None
    entered: np.ndarray
    offsets: np.ndarray | None = None
    rec_t: np.ndarray | None = None
    rec_x: np.ndarray | None = None
    rec_v: np.ndarray | None = None
    rec_W: np.ndarray | None = None
    rec_U: np.ndarray | None = None

    @property
    def n(self):
        return len(self.tau)

    def segment(self, i):
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    def ray_index(self):
        """Ray id of every recorded sample."""
        return np.repeat(np.arange(self.n), np.diff(self.offsets))


MAX_RANK = 16
_RECORD_BYTES = 2 ** 27


def _pair_tables(pair, rank):
    if pair is None:
        tab = (np.zeros((0, 6)), np.zeros((0, 3, 1, 1), complex))
    else:
        tab = pair.kernel_tables()
    if tab is None or rank > MAX_RANK:
        return None
    if len(tab) == 2:
        tab = tuple(tab) + (np.zeros((0, 6)), np.zeros((0, rank, rank), complex), 0.0)
    prof, coef, gprof, gmats, gs = tab
    return (np.ascontiguousarray(prof, dtype=float),
            np.ascontiguousarray(coef, dtype=complex),
            np.ascontiguousarray(gprof, dtype=float),
            np.ascontiguousarray(gmats, dtype=complex), float(gs))


def _trace_compiled(metric, pair, tables, x0, v0, dt, r_out, r_event, record, record_U,
                    phi_sign, max_len):
    rank = pair.k if pair is not None else 1
    prof, coef, gprof, gmats, gs = tables
    n = len(x0)
    cap = int(4.0 * max(r_out, 1.0) / dt) + 16 if record else 1
    out = _core.trace(metric.terms, prof, coef, gprof, gmats, gs, rank, float(phi_sign), x0, v0, float(dt),
                      float(r_out), float(r_event), pair is not None, bool(record),
                      bool(record_U), float(max_len), cap)
    redo = np.flatnonzero(out["status"] == _CAPACITY)
    if redo.size == 0:
        return out
    # rare long rays: re-run them with a buffer sized for the full length
    big = int(max_len / dt) + 16
    sub = _core.trace(metric.terms, prof, coef, gprof, gmats, gs, rank, float(phi_sign),
                      np.ascontiguousarray(x0[redo]), np.ascontiguousarray(v0[redo]),
                      float(dt), float(r_out), float(r_event), pair is not None,
                      bool(record), bool(record_U), float(max_len), big)
    return _merge(out, sub, redo, n)


def _merge(out, sub, redo, n):
    for key in ("status", "tau", "x", "v", "U", "W", "entered"):
        if out[key] is not None:
            out[key][redo] = sub[key]
    if "offsets" not in out:
        return out
    counts = np.diff(out["offsets"])
    counts[redo] = np.diff(sub["offsets"])
    pieces = {k: [] for k in ("rec_t", "rec_x", "rec_v", "rec_W", "rec_U") if k in out}
    where = {int(r): j for j, r in enumerate(redo)}
    for i in range(n):
        src, j = (sub, where[i]) if i in where else (out, i)
        s = slice(int(src["offsets"][j]), int(src["offsets"][j + 1]))
        for k in pieces:
            pieces[k].append(src[k][s])
    for k in pieces:
        out[k] = np.concatenate(pieces[k])
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    out["offsets"] = offsets
    return out


def _trace_numpy(metric, pair, x0, v0, dt, r_out, r_event, record, record_U, phi_sign,
                 max_len):
    att = None
    rank = 1
    if pair is not None:
        rank = pair.k
        att = lambda x, v: pair.att(x, v, phi_sign)  # noqa: E731
    return _numpy_backend.trace(metric.accel, att, rank, x0, v0, dt=dt, r_out=r_out,
                                r_event=r_event, record=record, record_U=record_U,
                                max_len=max_len)


def _concat(parts, n):
    first = parts[0]
    out = {}
    for key in ("status", "tau", "x", "v", "U", "W", "entered"):
        out[key] = None if first[key] is None else np.concatenate([p[key] for p in parts])
    if "offsets" in first:
        counts = np.concatenate([np.diff(p["offsets"]) for p in parts])
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        out["offsets"] = offsets
        for key in ("rec_t", "rec_x", "rec_v", "rec_W", "rec_U"):
            if key in first:
                out[key] = np.concatenate([p[key] for p in parts])
    return out


def trace_rays(metric, pair, x0, v0, *, dt, r_out, r_event=0.0, record=False,
               record_U=False, phi_sign=1.0, max_len=None, backend=None, chunk=8192):
    """Integrate geodesics (and optionally the transport ODEs) for a batch of rays.

    Parameters
    ----------
    metric : MetricField
    pair : AttenuationPair or None
        With ``None`` only the geodesic flow is integrated.
    x0, v0 : array_like, shape (n, 2)
    dt : float
        Fixed RK4 step.
    r_out : float
        Rays stop at the first crossing of this circle.
    r_event : float, optional
        Record only the part of the ray inside this circle.
    phi_sign : float
        Multiplies the potential part of the attenuation (``-1`` gives the
        pair ``(A, -Phi)`` used for reversed rays).
    backend : {"compiled", "numpy"}, optional

    Returns
    -------
    RayBatch
    """
    x0 = np.ascontiguousarray(np.atleast_2d(x0), dtype=float)
    v0 = np.ascontiguousarray(np.atleast_2d(v0), dtype=float)
    n = len(x0)
    if max_len is None:
        max_len = 20.0 * r_out
    backend = backend or default_backend()
    tables = None
    if backend == "compiled":
        if _core is None:
            raise RuntimeError("compiled backend is not built")
        tables = _pair_tables(pair, pair.k if pair is not None else 1)
        if tables is None:
            backend = "numpy"
    if record:
        # dense per-ray record buffers: keep each chunk near _RECORD_BYTES
        rank = pair.k if pair is not None else 1
        per_ray = (4.0 * max(r_out, 1.0) / dt + 16) * (48 + 16 * rank * rank * (1 + record_U))
        chunk = max(64, min(chunk, int(_RECORD_BYTES / per_ray)))
    parts = []
    for lo in range(0, max(n, 1), chunk):
        sl = slice(lo, min(n, lo + chunk))
        if backend == "compiled":
            parts.append(_trace_compiled(metric, pair, tables, x0[sl], v0[sl], dt, r_out,
                                         r_event, record, record_U, phi_sign, max_len))
        else:
            parts.append(_trace_numpy(metric, pair, x0[sl], v0[sl], dt, r_out, r_event,
                                      record, record_U, phi_sign, max_len))
    out = parts[0] if len(parts) == 1 else _concat(parts, n)
    return RayBatch(**out)
