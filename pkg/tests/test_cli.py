"""Command line subcommands, exit codes and artifacts."""
import numpy as np
import pytest

from gaugetomo import cli, io
from gaugetomo.config import loads
from gaugetomo.experiments import Setup
from gaugetomo.xray import Sinogram

SMALL = ("[metric]\nkind = conformal\n"
         "[pair]\nk = 1\nn_terms = 2\n"
         "[grid]\nn_r = 16\nn_theta = 16\nn_beta = 8\nn_alpha = 8\nn_dir = 16\n"
         "[integrator]\nstep = 1/64\nadjoint_step = 1/32\n"
         "[solver]\nmax_iter = 5\n")


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL)
    return path


def _run(*args):
    return cli.main(list(args) + ["--quiet"])


def test_forward_writes_sinogram(small_cfg, tmp_path):
    out = tmp_path / "fw"
    assert _run("forward", "--config", str(small_cfg), "--out", str(out)) == cli.EXIT_OK
    sino = io.read_sinogram(out / "sinogram.csv", k=1)
    assert sino.values.shape == (8, 8, 1) and np.isfinite(sino.values).all()
    assert np.abs(sino.values).max() > 0
    assert (out / "phantom.csv").exists()


def test_forward_is_deterministic(small_cfg, tmp_path):
    for d in ("a", "b"):
        assert _run("forward", "--config", str(small_cfg), "--out", str(tmp_path / d)) == 0
    assert (tmp_path / "a/sinogram.csv").read_bytes() == (tmp_path / "b/sinogram.csv").read_bytes()


def test_seed_flag_overrides(small_cfg, tmp_path):
    _run("forward", "--config", str(small_cfg), "--out", str(tmp_path / "a"))
    _run("forward", "--config", str(small_cfg), "--out", str(tmp_path / "b"), "--seed", "5")
    assert (tmp_path / "a/sinogram.csv").read_bytes() != (tmp_path / "b/sinogram.csv").read_bytes()


def test_scatter_writes_matrices(small_cfg, tmp_path):
    out = tmp_path / "sc"
    assert _run("scatter", "--config", str(small_cfg), "--out", str(out)) == cli.EXIT_OK
    data = io.read_scattering(out / "scattering.csv", k=1)
    assert data.C.shape == (8, 8, 1, 1)
    assert np.abs(data.C).min() > 0


def test_decompose_writes_split(small_cfg, tmp_path):
    out = tmp_path / "dc"
    assert _run("decompose", "--config", str(small_cfg), "--out", str(out)) == cli.EXIT_OK
    for name in ("field.csv", "solenoidal.csv", "potential.csv"):
        assert (out / name).exists()
    h = io.read_pair_field(out / "field.csv")
    hs = io.read_pair_field(out / "solenoidal.csv")
    assert hs.f.shape == h.f.shape


def test_reconstruct_zero_data_gives_zero(small_cfg, tmp_path):
    cfg = loads(SMALL)
    S = Setup(cfg)
    data = tmp_path / "zero.csv"
    io.write_sinogram(data, Sinogram(S.fan1, np.zeros(S.fan1.shape + (1,), complex)), S.dt)
    out = tmp_path / "rc"
    code = _run("reconstruct", "--config", str(small_cfg), "--out", str(out), "--data", str(data))
    assert code == cli.EXIT_OK
    rec = io.read_pair_field(out / "reconstruction.csv", k=1)
    assert np.abs(rec.alpha).max() == 0 and np.abs(rec.f).max() == 0


def test_reconstruct_rejects_mismatched_fan(small_cfg, tmp_path):
    cfg = loads(SMALL.replace("n_beta = 8", "n_beta = 6"))
    S = Setup(cfg)
    data = tmp_path / "other.csv"
    io.write_sinogram(data, Sinogram(S.fan1, np.zeros(S.fan1.shape + (1,), complex)), S.dt)
    code = _run("reconstruct", "--config", str(small_cfg), "--out", str(tmp_path / "o"),
                "--data", str(data))
    assert code == cli.EXIT_INPUT


def test_gauge_invariance_on_trivial_pair(tmp_path):
    cfg = loads("[metric]\nkind = euclidean\n[pair]\nscale = 0\n"
                "[grid]\nn_r = 16\nn_theta = 16\nn_beta = 6\nn_alpha = 6\n"
                "[experiment]\ntrials = 2\n")
    code, results = cli.run_experiment(cfg, tmp_path / "gi")
    assert code == cli.EXIT_OK and results[0].passed
    report = (tmp_path / "gi/report.txt").read_text()
    assert "[PASS]" in report and "failed: none" in report
    assert (tmp_path / "gi/gauge_invariance.csv").exists()


def test_experiment_subcommand_by_name(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[metric]\nkind = euclidean\n[pair]\nscale = 0\n"
                    "[grid]\nn_r = 16\nn_theta = 16\nn_beta = 6\nn_alpha = 6\n")
    code = _run("experiment", "realification", "--config", str(path), "--out", str(tmp_path / "e"))
    assert code == cli.EXIT_OK
    assert "realification" in (tmp_path / "e/report.txt").read_text()


def test_missing_config_is_input_error(tmp_path):
    assert _run("forward", "--config", str(tmp_path / "nope.ini")) == cli.EXIT_INPUT


def test_invalid_config_is_input_error(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[metric]\nkind = conformal\n[grid]\nn_r = 2\n")
    assert _run("scatter", "--config", str(path), "--out", str(tmp_path / "o")) == cli.EXIT_INPUT


def test_unknown_subcommand_exits():
    with pytest.raises(SystemExit):
        cli.main(["bogus"])
