"""Numerical tomography of connections and Higgs fields on simple surfaces.

Geodesic and parallel-transport integration on a disk with a closed-form
metric, attenuated ray transforms of matrix-valued pair fields, the
solenoidal/potential splitting, pseudolinearization of scattering data and
gauge recovery.
"""
from ._kernels import available as available_backends
from ._kernels import default_backend, trace_rays
from .errors import (GaugeInconsistent, GaugeTomoError, IntegrationDiverged, JetMismatch,
                     ParseError, PointOutsideDomain, RayMissesM, SchemaError, SingularData,
                     SingularGauge, SingularSystem, SingularWeight, StagnationWarning, TrappedRay,
                     ValidationError)
from .gauge import (AttenuationPair, CallablePair, GaugeField, PairField, TermPair,
                    boundary_jet_gauge, boundary_normalize, d_A, delta_A, eval_attenuation,
                    gauge_transform, laplacian_A)
from .geometry import (FanBeamGrid, PhasePoint, RayPath, exit_times, fan_beam_grid,
                       geodesic_trace, scattering_relation, simplicity_check)
from .grid import PolarGrid, matching_M1_grid
from .metric import R_M, R_M1, MetricField, metric_eval
from .decomp import dirichlet_solve, orthogonality_check, split
from .transport import (ScatteringData, fundamental_matrix, invariant_extension,
                        scattering_data, weight_at)
from .xray import (Sinogram, adjoint_backproject, extension_factor, forward_function,
                   forward_pair, normal_operator)
from .pseudolin import (gauge_distance, gauge_integrate, hat_pair, hat_system,
                        linear_reconstruct, nonlinear_stability_probe, pseudolin_sinogram)
from .realify import equivalence_check, realify_pair, realify_weight

__version__ = "0.1.0"

__all__ = [
    "available_backends", "default_backend", "trace_rays", "GaugeInconsistent",
    "GaugeTomoError", "IntegrationDiverged", "JetMismatch", "ParseError",
    "PointOutsideDomain", "RayMissesM", "SchemaError", "SingularData", "SingularGauge",
    "SingularSystem", "SingularWeight", "StagnationWarning", "TrappedRay",
    "ValidationError", "AttenuationPair", "CallablePair", "GaugeField", "PairField",
    "TermPair", "boundary_jet_gauge", "boundary_normalize", "d_A", "delta_A",
    "eval_attenuation", "gauge_transform", "laplacian_A", "FanBeamGrid", "PhasePoint",
    "RayPath", "exit_times", "fan_beam_grid", "geodesic_trace", "scattering_relation",
    "simplicity_check", "PolarGrid", "matching_M1_grid", "R_M", "R_M1", "MetricField",
    "metric_eval", "dirichlet_solve", "orthogonality_check", "split", "ScatteringData",
    "fundamental_matrix", "invariant_extension", "scattering_data", "weight_at",
    "Sinogram", "adjoint_backproject", "extension_factor", "forward_function",
    "forward_pair", "normal_operator", "gauge_distance", "gauge_integrate", "hat_pair",
    "hat_system", "linear_reconstruct", "nonlinear_stability_probe", "pseudolin_sinogram",
    "equivalence_check", "realify_pair", "realify_weight",
]
