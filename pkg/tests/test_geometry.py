import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaugetomo import (MetricField, PhasePoint, exit_times, fan_beam_grid, geodesic_trace,
                       scattering_relation, simplicity_check)
from gaugetomo.errors import PointOutsideDomain


def test_diameter_chord(euclid):
    ray = geodesic_trace(euclid, PhasePoint([1.0, 0.0], [-1.0, 0.0]))
    assert abs(ray.tau - 2.0) < 1e-12
    assert np.allclose(ray.exit.x, [-1.0, 0.0], atol=1e-12)
    assert np.all(np.diff(ray.t) >= 0) and ray.t[-1] == pytest.approx(2.0)


def test_chord_length_two_cos_alpha(euclid, fan_e):
    tau = exit_times(euclid, fan_e)
    assert np.max(np.abs(tau - 2 * np.cos(fan_e.alpha)[None, :])) < 1e-11


def test_exit_time_self_convergence(bump):
    start = PhasePoint([1.0, 0.0], [-1.0, 0.0])
    taus = [geodesic_trace(bump, start, dt=dt).tau for dt in (1 / 16, 1 / 32, 1 / 64)]
    d1, d2 = abs(taus[0] - taus[1]), abs(taus[1] - taus[2])
    assert d2 < 1e-8
    assert d1 / max(d2, 1e-16) > 8.0  # fourth order would give 16


def test_geodesic_unit_speed(bump):
    fan = fan_beam_grid(bump, 4, 4)
    x, v = fan.flat()
    ray = geodesic_trace(bump, PhasePoint(x[5], v[5]))
    assert np.max(np.abs(bump.norm(ray.x, ray.v) - 1.0)) < 1e-9


def test_fan_grid_small(euclid):
    fan = fan_beam_grid(euclid, 4, 4)
    assert fan.size == 16
    nu = -fan.x
    assert np.all(np.einsum("bai,bai->ba", fan.v, nu) > 0)
    assert np.allclose(np.einsum("bai,bai->ba", fan.v, nu), fan.cos_alpha)


def test_fan_measure_total(euclid):
    err = {n: abs(fan_beam_grid(euclid, n, n).mu.sum() - 4 * np.pi) for n in (32, 64)}
    assert err[64] / (4 * np.pi) < 0.01
    assert err[32] / err[64] >= 3.0


def test_fan_measure_on_M1(euclid):
    fan = fan_beam_grid(euclid, 64, 64, "M1")
    assert abs(fan.mu.sum() - 4 * np.pi * 1.1) / (4 * np.pi * 1.1) < 0.01


def test_fan_coordinates_inverse(bump):
    fan = fan_beam_grid(bump, 8, 6, "M1")
    x, v = fan.flat()
    beta, alpha = fan.fan_coordinates(x, v)
    assert np.allclose(beta, np.repeat(fan.beta, fan.n_alpha))
    assert np.allclose(alpha, np.tile(fan.alpha, fan.n_beta))


def test_fan_grid_rejects_tiny(euclid):
    with pytest.raises(ValueError):
        fan_beam_grid(euclid, 2, 8)


def test_scattering_relation_diameter(euclid):
    out = scattering_relation(euclid, PhasePoint([1.0, 0.0], [-1.0, 0.0]))
    assert np.allclose(out.x, [-1.0, 0.0], atol=1e-12)
    assert np.allclose(out.v, [-1.0, 0.0], atol=1e-12)


@given(st.floats(0, 2 * np.pi), st.floats(-1.4, 1.4))
def test_scattering_relation_exit_angle(euclid, beta, alpha):
    # alpha is measured counterclockwise from the inward normal
    x = np.array([np.cos(beta), np.sin(beta)])
    nu = -x
    perp = np.array([-nu[1], nu[0]])
    v = np.cos(alpha) * nu + np.sin(alpha) * perp
    out = scattering_relation(euclid, PhasePoint(x, v))
    expect = beta + np.pi + 2 * alpha
    assert np.allclose(out.x, [np.cos(expect), np.sin(expect)], atol=1e-10)


def test_scattering_relation_refined(bump):
    fan = fan_beam_grid(bump, 6, 6)
    x, v = fan.flat()
    a = scattering_relation(bump, PhasePoint(x, v), dt=1 / 256)
    b = scattering_relation(bump, PhasePoint(x, v), dt=1 / 1024)
    assert np.max(np.abs(a.x - b.x)) < 1e-8


def test_start_outside_rejected(euclid):
    with pytest.raises(PointOutsideDomain):
        geodesic_trace(euclid, PhasePoint([1.5, 0.0], [-1.0, 0.0]))


def test_simplicity(euclid):
    probe = fan_beam_grid(euclid, 8, 8)
    rep = simplicity_check(euclid, probe)
    assert rep.passed and abs(rep.min_jacobi - 1.0) < 1e-6
    conf = MetricField.conformal(0.05, 4.0)
    assert simplicity_check(conf, fan_beam_grid(conf, 8, 8)).passed
    strong = MetricField.conformal(5.0, 40.0)
    assert not simplicity_check(strong, fan_beam_grid(strong, 8, 8)).passed
