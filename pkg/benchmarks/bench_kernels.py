"""Compiled versus numpy ray integration.

Usage::

    python3 benchmarks/bench_kernels.py [--rays N] [--repeat R] [--k K]

Times scattering-type integration (endpoint only), gauged pairs and recorded
rays on a fan grid over M1, and reports the speed-up and the largest
difference between the two backends.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from gaugetomo import MetricField, fan_beam_grid, trace_rays
from gaugetomo import _kernels
from gaugetomo.gauge import gauge_transform
from gaugetomo.phantoms import random_gauge, random_pair


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rays", type=int, default=1024, help="number of rays (default 1024)")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--k", type=int, default=2, help="bundle rank")
    ap.add_argument("--dt", type=float, default=1 / 256)
    args = ap.parse_args(argv)

    if "compiled" not in _kernels.available():
        print("compiled backend not built; only the numpy backend is available")
        return 1
    rng = np.random.default_rng(0)
    metric = MetricField.conformal(0.05, 4.0)
    side = max(2, int(round(np.sqrt(args.rays))))
    x0, v0 = fan_beam_grid(metric, side, side, "M1").flat()
    plain = random_pair(args.k, rng)
    gauged = gauge_transform(plain, random_gauge(args.k, rng))
    cases = [
        ("plain pair", plain, {}),
        ("gauged pair", gauged, {}),
        ("recorded", plain, {"record": True, "record_U": True, "r_event": 1.0}),
    ]
    print(f"{len(x0)} rays, k = {args.k}, dt = {args.dt:g}, best of {args.repeat}")
    print(f"{'case':<14}{'compiled [s]':>14}{'numpy [s]':>12}{'speed-up':>10}{'max diff':>11}")
    for name, pair, extra in cases:
        kw = dict(dt=args.dt, r_out=1.1, **extra)
        tc, a = best_of(lambda: trace_rays(metric, pair, x0, v0, backend="compiled", **kw),
                        args.repeat)
        tn, b = best_of(lambda: trace_rays(metric, pair, x0, v0, backend="numpy", **kw),
                        args.repeat)
        diff = max(np.max(np.abs(a.U - b.U)), np.max(np.abs(a.W - b.W)))
        print(f"{name:<14}{tc:>14.3f}{tn:>12.3f}{tn / tc:>10.1f}{diff:>11.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
