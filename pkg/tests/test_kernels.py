import numpy as np
import pytest

from gaugetomo import MetricField, fan_beam_grid, trace_rays
from gaugetomo import _kernels
from gaugetomo.gauge import gauge_transform
from gaugetomo.phantoms import random_gauge, random_pair

compiled = pytest.mark.skipif("compiled" not in _kernels.available(),
                              reason="compiled backend not built")


def _rays(metric, domain="M1"):
    fan = fan_beam_grid(metric, 8, 6, domain)
    return fan.flat()


def test_backend_names():
    names = _kernels.available()
    assert "numpy" in names
    assert _kernels.default_backend() in names


def test_forced_numpy(monkeypatch):
    monkeypatch.setenv("GAUGETOMO_BACKEND", "numpy")
    assert _kernels.default_backend() == "numpy"


@compiled
@pytest.mark.parametrize("k", [1, 2, 3])
def test_compiled_matches_numpy(k):
    rng = np.random.default_rng(k)
    metric = MetricField.conformal(0.05, 4.0).perturbed(
        np.array([[1.0, 0.1, 0.0, 0.4, -0.3, 0.5, 0.01, 0.005, 0.02]]))
    pair = random_pair(k, rng)
    x0, v0 = _rays(metric)
    kw = dict(dt=1 / 128, r_out=1.1, r_event=1.0, record=True, record_U=True)
    a = trace_rays(metric, pair, x0, v0, backend="compiled", **kw)
    b = trace_rays(metric, pair, x0, v0, backend="numpy", **kw)
    assert np.array_equal(a.offsets, b.offsets)
    for key in ("tau", "x", "v", "U", "W", "rec_x", "rec_W", "rec_U"):
        assert np.max(np.abs(getattr(a, key) - getattr(b, key))) < 1e-12, key


@compiled
def test_compiled_gauged_pair_matches_numpy():
    rng = np.random.default_rng(7)
    metric = MetricField.conformal(0.05, 4.0)
    pair = gauge_transform(random_pair(2, rng), random_gauge(2, rng))
    assert pair.kernel_tables() is not None
    x0, v0 = _rays(metric)
    a = trace_rays(metric, pair, x0, v0, dt=1 / 128, r_out=1.1, phi_sign=-1.0,
                   backend="compiled")
    b = trace_rays(metric, pair, x0, v0, dt=1 / 128, r_out=1.1, phi_sign=-1.0, backend="numpy")
    assert np.max(np.abs(a.U - b.U)) < 1e-12
    assert np.max(np.abs(a.W - b.W)) < 1e-12


@compiled
def test_callable_pair_falls_back():
    from gaugetomo import CallablePair

    metric = MetricField.euclidean()
    base = random_pair(1, np.random.default_rng(0))
    pair = CallablePair(1, base.coefficients)
    x0, v0 = _rays(metric)
    a = trace_rays(metric, pair, x0, v0, dt=1 / 64, r_out=1.1, backend="compiled")
    b = trace_rays(metric, base, x0, v0, dt=1 / 64, r_out=1.1, backend="compiled")
    assert np.max(np.abs(a.U - b.U)) < 1e-12


def test_geodesic_only_batch():
    metric = MetricField.euclidean()
    x0, v0 = _rays(metric, "M")
    b = trace_rays(metric, None, x0, v0, dt=1 / 64, r_out=1.0)
    assert b.U is None or np.allclose(b.U, np.eye(1))
    assert np.all(b.status == _kernels.OK)


def test_trapped_status():
    # a geodesic that cannot leave: max_len shorter than the chord
    metric = MetricField.euclidean()
    b = trace_rays(metric, None, [[1.0, 0.0]], [[-1.0, 0.0]], dt=1 / 64, r_out=1.0,
                   max_len=0.5)
    assert b.status[0] == _kernels.TRAPPED


@compiled
def test_benchmark_script_runs(capsys):
    import importlib.util
    import pathlib
    path = pathlib.Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    assert mod.main(["--rays", "16", "--repeat", "1", "--dt", "0.03125"]) == 0
    out = capsys.readouterr().out
    assert "gauged pair" in out and "speed-up" in out
