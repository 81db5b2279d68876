import numpy as np
import pytest

from gaugetomo import (MetricField, PolarGrid, TermPair, d_A, dirichlet_solve, orthogonality_check,
                       split)
from gaugetomo.decomp import manufactured_potential_error, projection_perturbation_probe
from gaugetomo.gauge import fn_norm, pair_norms
from gaugetomo.phantoms import potential_function, random_pair, random_pair_field, random_potential

E = MetricField.euclidean()


def _bump(grid):
    r2 = grid.R ** 2
    p = np.sin(np.pi * r2)
    lap = 4 * np.pi * np.cos(np.pi * r2) - 4 * np.pi ** 2 * r2 * np.sin(np.pi * r2)
    return p, lap


def test_zero_source(grid32, rng):
    p = dirichlet_solve(random_pair(2, rng), E, np.zeros((grid32.size, 2)), grid32)
    assert not np.any(p)


@pytest.mark.parametrize("c", [0.0, 0.9 + 0.4j])
def test_manufactured_dirichlet(c):
    pair = TermPair.constant_higgs([[c]]) if c else TermPair.zero(1)
    err = []
    for n in (24, 48):
        g = PolarGrid(n, n)
        p, lap = _bump(g)
        src = -lap + abs(c) ** 2 * p
        out = dirichlet_solve(pair, E, src, g)[:, 0]
        err.append(np.max(np.abs(out - p)))
    assert err[1] < 1e-3
    assert err[0] / err[1] > 3.5


def test_split_reconstructs(grid32, bump, rng):
    pair = random_pair(2, rng)
    h = random_pair_field(grid32, 2, rng)
    dec = split(pair, bump, h)
    back = dec.h_s + d_A(pair, dec.p, grid32, bump)
    assert np.max(np.abs((back - h).vector())) < 1e-12
    assert np.allclose(dec.p[grid32.boundary], 0)


def test_split_of_discrete_potential(grid32, bump, rng):
    pair = random_pair(2, rng)
    q = random_potential(grid32, 2, rng)
    dec = split(pair, bump, d_A(pair, q, grid32, bump))
    assert pair_norms(dec.h_s, bump) < 1e-10
    assert fn_norm(dec.p - q, bump, grid32) / fn_norm(q, bump, grid32) < 1e-10


def test_split_of_analytic_potential_converges(bump):
    rng = np.random.default_rng(2)
    pair = random_pair(2, rng)
    q = potential_function(2, rng)
    e1 = manufactured_potential_error(pair, bump, PolarGrid(24, 24), q)
    e2 = manufactured_potential_error(pair, bump, PolarGrid(48, 48), q)
    assert e2 < 1e-3 and e1 / e2 > 3.5


def test_split_fixes_solenoidal_and_is_idempotent(grid32, bump, rng):
    pair = random_pair(2, rng)
    hs = split(pair, bump, random_pair_field(grid32, 2, rng)).h_s
    again = split(pair, bump, hs)
    assert fn_norm(again.p, bump, grid32) < 1e-8 * pair_norms(hs, bump)
    assert pair_norms(again.h_s - hs, bump) < 1e-8 * pair_norms(hs, bump)


def test_orthogonality(grid64, bump):
    rng = np.random.default_rng(6)
    pair = random_pair(2, rng)
    rep = orthogonality_check(pair, bump, random_pair_field(grid64, 2, rng))
    assert rep["max_ratio"] <= 5e-3
    q = random_potential(grid64, 2, rng)
    pot = orthogonality_check(pair, bump, d_A(pair, q, grid64, bump))
    assert pot["norm_h_s"] < 1e-10


def test_projection_perturbation_scaling(grid32, bump):
    pair = random_pair(2, np.random.default_rng(1))
    zero = projection_perturbation_probe(pair, bump, grid32, 0.0)
    assert zero["difference"] == 0
    a = projection_perturbation_probe(pair, bump, grid32, 0.02, seed=3)
    b = projection_perturbation_probe(pair, bump, grid32, 0.01, seed=3)
    assert 0.3 <= a["ratio"] / b["ratio"] <= 3.0
    m1 = projection_perturbation_probe(pair, bump, grid32, 0.02, seed=3, perturb="metric")
    m2 = projection_perturbation_probe(pair, bump, grid32, 0.01, seed=3, perturb="metric")
    assert 0 < m2["difference"] < m1["difference"]
    assert 0.3 <= m1["ratio"] / m2["ratio"] <= 3.0
