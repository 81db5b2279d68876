"""Experiment configuration: sections of ``key = value`` lines.

Example::

    [metric]
    kind = conformal
    amplitude = 0.05

    [experiment]
    name = adjointness

Only ``metric.kind`` is required; every other key has a default.  Unknown
sections and keys are rejected.
"""
from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field, fields

from .errors import ParseError, ValidationError

METRIC_KINDS = ("euclidean", "conformal", "perturbed")
EXPERIMENTS = (
    "gauge_invariance", "kernel", "pseudolinearization", "adjointness", "decomposition",
    "normal_commutation", "reconstruct", "stability", "rigidity", "stability_scaling",
    "realification", "weighted_function",
)


@dataclass(frozen=True)
class MetricSpec:
    """``g = (1 + amplitude exp(-width |x|^2)) I`` plus a seeded C^4 perturbation."""

    kind: str = "euclidean"
    amplitude: float = 0.05
    width: float = 4.0
    perturbation: float = 0.0


@dataclass(frozen=True)
class PairSpec:
    """Random term pair of rank ``k``; ``c3`` rescales it to that C^3 norm."""

    k: int = 2
    n_terms: int = 3
    scale: float = 0.3
    c3: float = 0.0
    higgs: bool = True
    connection: bool = True
    real: bool = False
    seed: int = 0


@dataclass(frozen=True)
class GridSpec:
    n_r: int = 64
    n_theta: int = 64
    n_beta: int = 64
    n_alpha: int = 64
    n_dir: int = 128


@dataclass(frozen=True)
class IntegratorSpec:
    step: float = 1.0 / 256
    adjoint_step: float = 1.0 / 32
    backend: str = "auto"


@dataclass(frozen=True)
class SolverSpec:
    tol: float = 1e-3
    max_iter: int = 100
    gauge_tol: float = 1e-6


@dataclass(frozen=True)
class ExperimentSpec:
    name: str = "gauge_invariance"
    out: str = "out"
    seed: int = 0
    trials: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    metric: MetricSpec = field(default_factory=MetricSpec)
    pair: PairSpec = field(default_factory=PairSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    integrator: IntegratorSpec = field(default_factory=IntegratorSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    experiment: ExperimentSpec = field(default_factory=ExperimentSpec)

    def replace(self, section, **changes):
        """Copy with ``changes`` applied to one section (validated)."""
        sec = dataclasses.replace(getattr(self, section), **changes)
        out = dataclasses.replace(self, **{section: sec})
        validate(out)
        return out


_SECTION_TYPES = {
    "metric": MetricSpec, "pair": PairSpec, "grid": GridSpec,
    "integrator": IntegratorSpec, "solver": SolverSpec, "experiment": ExperimentSpec,
}
REQUIRED = {("metric", "kind")}


def _convert(tp, raw, name):
    raw = raw.strip()
    try:
        if tp in (bool, "bool"):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if tp in (int, "int"):
            return int(raw)
        if tp in (float, "float"):
            if "/" in raw:
                num, den = raw.split("/", 1)
                return float(num) / float(den)
            return float(raw)
    except ValueError:
        raise ValidationError(name, f"cannot read {raw!r} as {getattr(tp, '__name__', tp)}")
    return raw


def _line_of(text):
    """Line number of every ``(section, key)`` (1-based)."""
    where = {}
    section = None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip().lower()
            where.setdefault((section, None), n)
        elif "=" in s and section is not None:
            where.setdefault((section, s.split("=", 1)[0].strip().lower()), n)
    return where


def loads(text):
    """Parse configuration text into a validated :class:`ExperimentConfig`."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                   comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("key outside of any section", exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ParseError("expected 'key = value'", line) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ParseError(str(exc).split(":")[-1].strip(), getattr(exc, "lineno", None)) from None
    lines = _line_of(text)
    given = {}
    for sec in cp.sections():
        name = sec.lower()
        if name not in _SECTION_TYPES:
            raise ParseError(f"unknown section [{sec}]", lines.get((name, None)))
        tp = _SECTION_TYPES[name]
        known = {f.name: f.type for f in fields(tp)}
        vals = {}
        for key, raw in cp.items(sec):
            if key not in known:
                raise ParseError(f"unknown key {name}.{key}", lines.get((name, key)))
            vals[key] = _convert(known[key], raw, f"{name}.{key}")
        given[name] = vals
    for sec, key in REQUIRED:
        if key not in given.get(sec, {}):
            raise ValidationError(f"{sec}.{key}", "required key is missing")
    cfg = ExperimentConfig(**{s: _SECTION_TYPES[s](**given.get(s, {})) for s in _SECTION_TYPES})
    validate(cfg)
    return cfg


def parse_config(path):
    """Read and validate a configuration file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text)


def validate(cfg):
    m = cfg.metric
    if m.kind not in METRIC_KINDS:
        raise ValidationError("metric.kind", f"must be one of {', '.join(METRIC_KINDS)}")
    if m.width <= 0:
        raise ValidationError("metric.width", "must be positive")
    if m.amplitude <= -1:
        raise ValidationError("metric.amplitude", "must exceed -1")
    if m.perturbation < 0:
        raise ValidationError("metric.perturbation", "must be non-negative")
    p = cfg.pair
    if p.k < 1:
        raise ValidationError("pair.k", "must be at least 1")
    if p.n_terms < 0:
        raise ValidationError("pair.n_terms", "must be non-negative")
    if p.c3 < 0:
        raise ValidationError("pair.c3", "must be non-negative")
    for f in fields(GridSpec):
        if getattr(cfg.grid, f.name) < 4:
            raise ValidationError(f"grid.{f.name}", "must be at least 4")
    if cfg.grid.n_r < 6:
        raise ValidationError("grid.n_r", "must be at least 6 (one pole and five rings)")
    if cfg.grid.n_theta % 2:
        raise ValidationError("grid.n_theta", "must be even")
    for name in ("step", "adjoint_step"):
        val = getattr(cfg.integrator, name)
        if not 0 < val <= 1.0 / 32:
            raise ValidationError(f"integrator.{name}", "must lie in (0, 1/32]")
    if cfg.integrator.backend not in ("auto", "compiled", "numpy"):
        raise ValidationError("integrator.backend", "must be auto, compiled or numpy")
    if cfg.solver.tol <= 0:
        raise ValidationError("solver.tol", "must be positive")
    if cfg.solver.max_iter < 1:
        raise ValidationError("solver.max_iter", "must be at least 1")
    if cfg.solver.gauge_tol <= 0:
        raise ValidationError("solver.gauge_tol", "must be positive")
    if cfg.experiment.name not in EXPERIMENTS:
        raise ValidationError("experiment.name", f"unknown experiment {cfg.experiment.name!r}")
    if cfg.experiment.trials < 0:
        raise ValidationError("experiment.trials", "must be non-negative")
    return cfg


def dumps(cfg):
    """Emit configuration text that parses back to an equal config."""
    out = io.StringIO()
    for sec in _SECTION_TYPES:
        out.write(f"[{sec}]\n")
        obj = getattr(cfg, sec)
        for f in fields(obj):
            val = getattr(obj, f.name)
            txt = repr(val) if isinstance(val, float) else str(val).lower() if isinstance(
                val, bool) else str(val)
            out.write(f"{f.name} = {txt}\n")
        out.write("\n")
    return out.getvalue()


def emit(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(cfg))
