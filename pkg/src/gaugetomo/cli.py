"""Command line entry point: ``gaugetomo <subcommand> [--config PATH] [--out DIR] ...``.

Exit codes: 0 success, 2 a criterion failed, 3 bad input, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys

import numpy as np

from . import config as config_mod
from . import decomp, experiments, io
from .errors import GaugeTomoError, ParseError, SchemaError, ValidationError
from .pseudolin import LinearProblem, linear_reconstruct
from .transport import scattering_data
from .xray import forward_pair

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("gaugetomo")


def _load(args):
    cfg = config_mod.parse_config(args.config) if args.config else config_mod.ExperimentConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(
            cfg, experiment=dataclasses.replace(cfg.experiment, seed=args.seed),
            pair=dataclasses.replace(cfg.pair, seed=args.seed))
    if getattr(args, "name", None):
        cfg = cfg.replace("experiment", name=args.name) if args.name != "all" else cfg
    out = args.out or cfg.experiment.out
    os.makedirs(out, exist_ok=True)
    return cfg, out


def _setup(cfg):
    ph = experiments.phantom_gen(cfg)
    return ph, experiments.Setup(cfg, ph.metric)


def cmd_forward(args):
    cfg, out = _load(args)
    ph, S = _setup(cfg)
    sino = forward_pair(ph.pair, ph.metric, ph.h, S.fan1, "M1", S.dt, S.backend)
    io.write_pair_field(os.path.join(out, "phantom.csv"), ph.h, ph.metric)
    io.write_sinogram(os.path.join(out, "sinogram.csv"), sino, S.dt)
    log.info("sinogram %dx%d (k=%d) written to %s", S.fan1.n_beta, S.fan1.n_alpha, sino.k, out)
    return EXIT_OK


def cmd_scatter(args):
    cfg, out = _load(args)
    ph, S = _setup(cfg)
    data = scattering_data(ph.pair, ph.metric, S.fan, S.dt, S.backend)
    io.write_scattering(os.path.join(out, "scattering.csv"), data)
    log.info("scattering data (k=%d) written to %s", data.k, out)
    return EXIT_OK


def cmd_decompose(args):
    cfg, out = _load(args)
    ph, S = _setup(cfg)
    dec = decomp.split(ph.pair, ph.metric, ph.h)
    io.write_pair_field(os.path.join(out, "field.csv"), ph.h, ph.metric)
    io.write_pair_field(os.path.join(out, "solenoidal.csv"), dec.h_s, ph.metric)
    k = ph.pair.k
    cols = ["x", "y"] + [f"p{i}_{part}" for i in range(k) for part in ("re", "im")]
    rows = np.hstack([S.grid.points, np.stack([dec.p.real, dec.p.imag], axis=-1).reshape(
        len(dec.p), 2 * k)])
    io.write_table(os.path.join(out, "potential.csv"), cols, rows,
                   {"format": "potential", "k": k})
    log.info("interior |delta h_s| = %.3e", dec.residual_delta)
    return EXIT_OK


def cmd_reconstruct(args):
    cfg, out = _load(args)
    ph, S = _setup(cfg)
    prob = LinearProblem(ph.pair, ph.metric, S.fan1, S.grid, S.n_dir, S.dt, S.dt_adj,
                         backend=S.backend)
    if args.data:
        data = io.read_sinogram(args.data, k=ph.pair.k, metric=ph.metric)
        if not data.grid.same_nodes(S.fan1):
            raise SchemaError(f"{args.data}: fan grid does not match the configuration")
        data = type(data)(S.fan1, data.values, data.domain)
    else:
        data = prob.forward(ph.h)
    rec = linear_reconstruct(prob, data, max_iter=cfg.solver.max_iter, tol=cfg.solver.tol)
    io.write_pair_field(os.path.join(out, "reconstruction.csv"), rec.h, ph.metric)
    io.write_table(os.path.join(out, "residuals.csv"), ["iteration", "relative_residual"],
                   [[i, r] for i, r in enumerate(rec.residuals)])
    log.info("%d iterations, relative residual %.3e", rec.iterations, rec.residuals[-1])
    return EXIT_OK


def _write_result(out, res):
    rows = res.rows
    if rows:
        cols = list(rows[0].keys())
        for r in rows[1:]:
            cols += [c for c in r if c not in cols]
        table = [[r.get(c, "") for c in cols] for r in rows]
        io.write_table(os.path.join(out, f"{res.name}.csv"), cols, table,
                       {"experiment": res.name, "passed": res.passed})


def run_experiment(cfg, out, names=None):
    """Run experiments (default: the configured one), write CSVs and ``report.txt``.

    Returns ``(exit_code, results)``.
    """
    names = [cfg.experiment.name] if names is None else list(names)
    os.makedirs(out, exist_ok=True)
    results = []
    for name in names:
        res = experiments.run(name, cfg)
        results.append(res)
        _write_result(out, res)
        log.info("%s (%.1f s)", res.line(), res.seconds)
    failed = [r for r in results if not r.passed]
    with open(os.path.join(out, "report.txt"), "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(r.line() + "\n")
        fh.write(f"failed: {', '.join(r.name for r in failed) if failed else 'none'}\n")
    return (EXIT_FAIL if failed else EXIT_OK), results


def cmd_experiment(args):
    cfg, out = _load(args)
    names = list(experiments.REGISTRY) if args.name == "all" else None
    return run_experiment(cfg, out, names)[0]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment configuration file")
    common.add_argument("--out", metavar="DIR", help="output directory (default: experiment.out)")
    common.add_argument("--seed", type=int, metavar="N", help="override the configured seeds")
    common.add_argument("--quiet", action="store_true", help="suppress progress messages")
    ap = argparse.ArgumentParser(prog="gaugetomo", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("forward", parents=[common], help="simulate a sinogram of the phantom field")
    sub.add_parser("scatter", parents=[common], help="compute scattering data of the pair")
    sub.add_parser("decompose", parents=[common], help="solenoidal/potential split of the phantom")
    rc = sub.add_parser("reconstruct", parents=[common], help="linear reconstruction by CGLS")
    rc.add_argument("--data", metavar="PATH", help="sinogram CSV (default: simulated)")
    ex = sub.add_parser("experiment", parents=[common], help="run an acceptance experiment")
    ex.add_argument("name", nargs="?", help="experiment name or 'all' (default: from config)")
    return ap


COMMANDS = {"forward": cmd_forward, "scatter": cmd_scatter, "decompose": cmd_decompose,
            "reconstruct": cmd_reconstruct, "experiment": cmd_experiment}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr, force=True)
    try:
        return COMMANDS[args.command](args)
    except (ParseError, ValidationError, SchemaError, OSError) as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT
    except (GaugeTomoError, FloatingPointError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
