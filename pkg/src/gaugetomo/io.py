"""Plain-text CSV artifacts: sinograms, scattering data and pair fields.

Each file opens with ``# key = value`` header lines (format, rank, grid
sizes, metric descriptor, step) followed by a column header row and one row
per node.  Floats are written with ``repr`` so a round trip is exact.
"""
from __future__ import annotations

import csv

import numpy as np

from .errors import SchemaError
from .gauge import PairField
from .geometry import DT, fan_beam_grid
from .grid import PolarGrid
from .metric import MetricField
from .transport import ScatteringData
from .xray import Sinogram


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------
def metric_from_descriptor(desc):
    """Inverse of :attr:`MetricField.descriptor`."""
    desc = desc.strip()
    if desc == "euclidean":
        return MetricField.euclidean()
    if "[" not in desc or not desc.endswith("]"):
        raise SchemaError(f"bad metric descriptor {desc!r}")
    kind, body = desc[:-1].split("[", 1)
    try:
        rows = [[float(v) for v in row.split(",")] for row in body.split(";") if row]
    except ValueError:
        raise SchemaError(f"bad metric descriptor {desc!r}") from None
    return MetricField(kind, np.array(rows))


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    return repr(float(x))


def _complex_cols(prefix, n):
    out = []
    for i in range(n):
        out += [f"{prefix}{i}_re", f"{prefix}{i}_im"]
    return out


def _split_complex(z):
    z = np.asarray(z, dtype=complex).reshape(len(z), -1)
    out = np.empty((len(z), 2 * z.shape[1]))
    out[:, 0::2] = z.real
    out[:, 1::2] = z.imag
    return out


def _join_complex(a):
    return a[:, 0::2] + 1j * a[:, 1::2]


def _write(path, header, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for key, val in header.items():
            fh.write(f"# {key} = {val}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _read(path):
    header = {}
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body = 0
    for body, line in enumerate(lines):
        if not line.startswith("#"):
            break
        key, _, val = line[1:].partition("=")
        header[key.strip()] = val.strip()
    else:
        body = len(lines)
    reader = list(csv.reader(lines[body:]))
    if not reader:
        raise SchemaError(f"{path}: no column header")
    columns = reader[0]
    try:
        data = np.array([[float(v) for v in row] for row in reader[1:] if row], dtype=float)
    except ValueError:
        raise SchemaError(f"{path}: non-numeric value") from None
    data = data.reshape(-1, len(columns))
    return header, columns, data


def _need(header, key, path, cast=str):
    if key not in header:
        raise SchemaError(f"{path}: header is missing {key!r}")
    try:
        return cast(header[key])
    except ValueError:
        raise SchemaError(f"{path}: bad value for {key!r}") from None


def _check_format(header, fmt, path):
    got = _need(header, "format", path)
    if got != fmt:
        raise SchemaError(f"{path}: expected a {fmt} file, found {got}")


def _check_k(found, k, path):
    if k is not None and found != k:
        raise SchemaError(f"{path}: rank {found} in header, expected {k}")


def _check_columns(columns, expected, path):
    if list(columns) != list(expected):
        raise SchemaError(f"{path}: column header does not match the declared layout")


def _fan_from_header(header, path, metric=None):
    nb = _need(header, "n_beta", path, int)
    na = _need(header, "n_alpha", path, int)
    radius = _need(header, "radius", path, float)
    if metric is None:
        metric = metric_from_descriptor(_need(header, "metric", path))
    return fan_beam_grid(metric, nb, na, radius)


def _fan_rows(fan):
    I, J = np.meshgrid(np.arange(fan.n_beta), np.arange(fan.n_alpha), indexing="ij")
    return np.stack([I.ravel(), J.ravel(), np.repeat(fan.beta, fan.n_alpha),
                     np.tile(fan.alpha, fan.n_beta), fan.mu.ravel()], axis=1)


FAN_COLS = ["i_beta", "j_alpha", "beta", "alpha", "mu"]


def _check_fan_rows(data, fan, path):
    if len(data) != fan.size:
        raise SchemaError(f"{path}: {len(data)} rows for a {fan.n_beta}x{fan.n_alpha} grid")
    ref = _fan_rows(fan)
    if not np.array_equal(data[:, :2], ref[:, :2]):
        raise SchemaError(f"{path}: node indices out of order")


# --------------------------------------------------------------------------
# sinograms
# --------------------------------------------------------------------------
def write_sinogram(path, sino, step=DT):
    fan = sino.grid
    K = sino.k
    header = {"format": "sinogram", "k": K, "n_beta": fan.n_beta, "n_alpha": fan.n_alpha,
              "radius": _fmt(fan.radius), "domain": sino.domain,
              "metric": fan.metric.descriptor, "step": _fmt(step)}
    rows = np.hstack([_fan_rows(fan), _split_complex(sino.flat())])
    _write(path, header, FAN_COLS + _complex_cols("u", K), rows)


def read_sinogram(path, k=None, metric=None):
    """Read a sinogram; ``k`` (if given) must match the header.

    The stored ``mu`` column replaces the recomputed one on the returned grid.
    """
    header, columns, data = _read(path)
    _check_format(header, "sinogram", path)
    K = _need(header, "k", path, int)
    _check_k(K, k, path)
    _check_columns(columns, FAN_COLS + _complex_cols("u", K), path)
    fan = _fan_from_header(header, path, metric)
    _check_fan_rows(data, fan, path)
    fan.mu = data[:, 4].reshape(fan.shape).copy()
    vals = _join_complex(data[:, 5:]).reshape(fan.shape + (K,))
    return Sinogram(fan, vals, header.get("domain", "M1"))


# --------------------------------------------------------------------------
# scattering data
# --------------------------------------------------------------------------
def write_scattering(path, data):
    fan = data.grid
    k = data.k
    header = {"format": "scattering", "k": k, "n_beta": fan.n_beta, "n_alpha": fan.n_alpha,
              "radius": _fmt(fan.radius), "metric": fan.metric.descriptor,
              "step": _fmt(data.dt)}
    C = data.C.reshape(fan.size, k * k)
    rows = np.hstack([_fan_rows(fan), _split_complex(C)])
    _write(path, header, FAN_COLS + _complex_cols("c", k * k), rows)


def read_scattering(path, k=None, metric=None):
    header, columns, data = _read(path)
    _check_format(header, "scattering", path)
    K = _need(header, "k", path, int)
    _check_k(K, k, path)
    _check_columns(columns, FAN_COLS + _complex_cols("c", K * K), path)
    fan = _fan_from_header(header, path, metric)
    _check_fan_rows(data, fan, path)
    fan.mu = data[:, 4].reshape(fan.shape).copy()
    C = _join_complex(data[:, 5:]).reshape(fan.shape + (K, K))
    return ScatteringData(fan, C, _need(header, "step", path, float))


# --------------------------------------------------------------------------
# pair fields
# --------------------------------------------------------------------------
GRID_COLS = ["i_r", "j_theta", "x", "y", "weight"]


def write_pair_field(path, h, metric=None):
    grid = h.grid
    k = h.k
    header = {"format": "pair_field", "k": k, "n_r": grid.n_r, "n_theta": grid.n_theta,
              "radius": _fmt(grid.radius),
              "metric": (metric.descriptor if metric is not None else "euclidean")}
    I, J = np.meshgrid(np.arange(grid.n_r), np.arange(grid.n_theta), indexing="ij")
    base = np.stack([I.ravel(), J.ravel(), grid.points[:, 0], grid.points[:, 1],
                     grid.weights], axis=1)
    rows = np.hstack([base, _split_complex(h.alpha[:, 0]), _split_complex(h.alpha[:, 1]),
                      _split_complex(h.f)])
    cols = GRID_COLS + _complex_cols("a1_", k) + _complex_cols("a2_", k) + _complex_cols("f", k)
    _write(path, header, cols, rows)


def read_pair_field(path, k=None):
    header, columns, data = _read(path)
    _check_format(header, "pair_field", path)
    K = _need(header, "k", path, int)
    _check_k(K, k, path)
    cols = GRID_COLS + _complex_cols("a1_", K) + _complex_cols("a2_", K) + _complex_cols("f", K)
    _check_columns(columns, cols, path)
    grid = PolarGrid(_need(header, "n_r", path, int), _need(header, "n_theta", path, int),
                     _need(header, "radius", path, float))
    if len(data) != grid.size:
        raise SchemaError(f"{path}: {len(data)} rows for a {grid.n_r}x{grid.n_theta} grid")
    z = _join_complex(data[:, 5:])
    a = np.stack([z[:, :K], z[:, K:2 * K]], axis=1)
    return PairField(grid, a, z[:, 2 * K:])


def write_table(path, columns, rows, header=None):
    """Generic numeric CSV with an optional ``# key = value`` header."""
    _write(path, header or {}, columns, rows)


def read_table(path):
    """``(header, columns, rows)`` with cells as strings."""
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = {}
    while lines and lines[0].startswith("#"):
        key, _, val = lines.pop(0)[1:].partition("=")
        header[key.strip()] = val.strip()
    rows = list(csv.reader(lines))
    return header, rows[0] if rows else [], rows[1:]
