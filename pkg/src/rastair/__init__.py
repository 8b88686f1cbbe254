"""Certifiably correct distributed range-aided SLAM."""

from .certify import EPS_LADDER, Certificate, min_eigenpair, verify
from .estimator import RigidAligner, StaircaseSolver
from .io import GeneratorConfig, generate_synthetic, parse, write
from .metrics import ate_rmse, suboptimality, umeyama_align
from .objective import build_data_matrix, cost, riemannian_gradient
from .problem import ProblemGraph, RangeMeasurement, RelativePoseMeasurement, build_problem
from .rbcd import RbcdOptions, run_rbcd
from .staircase import SolveReport, StaircaseOptions, solve

__version__ = "0.1.0"

__all__ = [
    "EPS_LADDER",
    "Certificate",
    "GeneratorConfig",
    "ProblemGraph",
    "RangeMeasurement",
    "RbcdOptions",
    "RelativePoseMeasurement",
    "RigidAligner",
    "SolveReport",
    "StaircaseOptions",
    "StaircaseSolver",
    "ate_rmse",
    "build_data_matrix",
    "build_problem",
    "cost",
    "generate_synthetic",
    "min_eigenpair",
    "parse",
    "riemannian_gradient",
    "run_rbcd",
    "solve",
    "suboptimality",
    "umeyama_align",
    "verify",
    "write",
]
