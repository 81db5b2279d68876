"""CSV artifacts: lossless round trips and schema checks."""
import hashlib

import numpy as np
import pytest

from gaugetomo import io
from gaugetomo.errors import SchemaError
from gaugetomo.geometry import fan_beam_grid
from gaugetomo.metric import MetricField
from gaugetomo.phantoms import random_pair_field
from gaugetomo.transport import ScatteringData
from gaugetomo.xray import Sinogram


def _cvals(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


@pytest.fixture
def fan(bump):
    return fan_beam_grid(bump, 6, 5, "M1")


def test_sinogram_round_trip_is_bitwise(tmp_path, fan, rng):
    sino = Sinogram(fan, _cvals(rng, fan.shape + (3,)), "M1")
    path = tmp_path / "s.csv"
    io.write_sinogram(path, sino)
    back = io.read_sinogram(path, k=3)
    assert np.array_equal(back.values, sino.values)
    assert back.domain == "M1"
    assert np.array_equal(back.grid.beta, fan.beta) and np.array_equal(back.grid.alpha, fan.alpha)
    assert back.grid.metric.descriptor == fan.metric.descriptor


def test_scattering_round_trip_is_bitwise(tmp_path, bump, rng):
    fan = fan_beam_grid(bump, 4, 6, "M")
    data = ScatteringData(fan, _cvals(rng, fan.shape + (2, 2)), 1 / 512)
    path = tmp_path / "c.csv"
    io.write_scattering(path, data)
    back = io.read_scattering(path, k=2)
    assert np.array_equal(back.C, data.C)
    assert back.dt == 1 / 512


def test_pair_field_round_trip_is_bitwise(tmp_path, grid32, rng, bump):
    h = random_pair_field(grid32, 2, rng)
    path = tmp_path / "h.csv"
    io.write_pair_field(path, h, bump)
    back = io.read_pair_field(path, k=2)
    assert np.array_equal(back.alpha, h.alpha) and np.array_equal(back.f, h.f)
    assert (back.grid.n_r, back.grid.n_theta) == (grid32.n_r, grid32.n_theta)


def test_awkward_floats_survive(tmp_path, fan):
    vals = np.full(fan.shape + (1,), 0.1 + 1e-300j)
    vals[0, 0, 0] = np.nextafter(1.0, 2.0) - 3e-17j
    path = tmp_path / "s.csv"
    io.write_sinogram(path, Sinogram(fan, vals))
    assert np.array_equal(io.read_sinogram(path).values, vals)


def test_mu_column_preserved(tmp_path, fan, rng):
    fan.mu = fan.mu * (1 + 1e-3 * rng.normal(size=fan.shape))   # not the recomputed weights
    digest = hashlib.sha256(fan.mu.tobytes()).hexdigest()
    path = tmp_path / "s.csv"
    io.write_sinogram(path, Sinogram(fan, _cvals(rng, fan.shape + (1,))))
    back = io.read_sinogram(path)
    assert hashlib.sha256(back.grid.mu.tobytes()).hexdigest() == digest


@pytest.mark.parametrize("kind", ["sinogram", "scattering", "pair_field"])
def test_rank_mismatch_raises(tmp_path, fan, grid32, rng, kind):
    path = tmp_path / "x.csv"
    if kind == "sinogram":
        io.write_sinogram(path, Sinogram(fan, _cvals(rng, fan.shape + (2,))))
        reader = io.read_sinogram
    elif kind == "scattering":
        io.write_scattering(path, ScatteringData(fan, _cvals(rng, fan.shape + (2, 2))))
        reader = io.read_scattering
    else:
        io.write_pair_field(path, random_pair_field(grid32, 2, rng))
        reader = io.read_pair_field
    with pytest.raises(SchemaError, match="rank 2"):
        reader(path, k=3)


def test_wrong_format_raises(tmp_path, fan, rng):
    path = tmp_path / "s.csv"
    io.write_sinogram(path, Sinogram(fan, _cvals(rng, fan.shape + (1,))))
    with pytest.raises(SchemaError, match="expected a scattering file"):
        io.read_scattering(path)


def test_tampered_header_raises(tmp_path, fan, rng):
    path = tmp_path / "s.csv"
    io.write_sinogram(path, Sinogram(fan, _cvals(rng, fan.shape + (1,))))
    text = path.read_text().replace("# n_alpha = 5", "# n_alpha = 4")
    path.write_text(text)
    with pytest.raises(SchemaError):
        io.read_sinogram(path)


def test_missing_header_key_raises(tmp_path, fan, rng):
    path = tmp_path / "s.csv"
    io.write_sinogram(path, Sinogram(fan, _cvals(rng, fan.shape + (1,))))
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("# k =")]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaError, match="'k'"):
        io.read_sinogram(path)


@pytest.mark.parametrize("metric", [MetricField.euclidean(), MetricField.conformal(0.05, 4.0)])
def test_metric_descriptor_round_trip(metric, rng):
    back = io.metric_from_descriptor(metric.descriptor)
    x = rng.uniform(-0.7, 0.7, (10, 2))
    assert np.array_equal(back.g(x), metric.g(x))


def test_bad_descriptor():
    with pytest.raises(SchemaError):
        io.metric_from_descriptor("conformal[oops")
