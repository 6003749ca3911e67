"""Convex polytopes with prescribed integral Gauss curvature."""

__version__ = "0.1.0"

from .admissibility import AdmissibilityReport, validate
from .functional import EvalReport, evaluate, gauge_project
from .ingest import DensitySpec, discretize
from .polytope import ProblemInstance, RadialPolytope, build
from .solver import SolveConfig, SolveReport, solve, solve_refined
from .transport import duality_gap, lp_oracle, plan_from_polytope

__all__ = [
    "AdmissibilityReport",
    "DensitySpec",
    "EvalReport",
    "ProblemInstance",
    "RadialPolytope",
    "SolveConfig",
    "SolveReport",
    "build",
    "discretize",
    "duality_gap",
    "evaluate",
    "gauge_project",
    "lp_oracle",
    "plan_from_polytope",
    "solve",
    "solve_refined",
    "validate",
]
