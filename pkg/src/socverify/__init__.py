"""Verification of first- and second-order optimality conditions for singular
solutions of optimal control problems that are affine in part of the control.

The pipeline: define or load a problem (polynomial dynamics, polynomial
endpoint maps), integrate or import a candidate, recover the Lagrange
multiplier set, transform the second variation, and test it — pointwise sign
conditions, a sampling scan of the critical cone, and a certified
uniform-positivity bound.
"""

from .checker import (CheckConfig, ConditionReport, FullReport, ScanResult,
                      SufficiencyResult, VertexData, full_report, necessity_scan,
                      pointwise_report, prepare_vertices, sufficiency_check)
from .cone import (ConeLayout, DiscretizedCone, assemble_form, build_cone,
                   gamma_batch, omega_p2_batch, propagate_batch)
from .forms import (ClassificationError, ProbeResult, QuadraticEvaluation,
                    expansion_probe, lagrangian_value, omega, omega_p, omega_p2)
from .goh import (ClassFlags, GohMatrices, HBlocks, bracket_b_columns,
                  bracket_g_values, classify_multiplier, goh_matrices, h_blocks,
                  lie_bracket_x, r_cross_check)
from .multipliers import (Multiplier, MultiplierSet, endpoint_gradient,
                          endpoint_hessian, endpoint_weights, find_multipliers,
                          integrate_costate, multiplier_residuals)
from .polynomials import Polynomial, poly_from_monomials
from .problem import (EndpointMap, ProblemDef, ProblemFormatError, VectorField,
                      parse_problem, problem_to_doc)
from .registry import available, get_problem, reference_trajectory, registry
from .trajectory import (Direction, FeasibilityReport, GohDirection, Grid,
                         IntegrationDivergedError, LinearizedSystem, Trajectory,
                         cumulative_trapezoid, deriv4, feasibility_report,
                         gamma_order, goh_propagate, goh_transform_direction,
                         integrate_linearized, integrate_state, linearize,
                         read_trajectory_csv, trapezoid, write_trajectory_csv)

__version__ = "0.1.0"

__all__ = [
    "CheckConfig", "ConditionReport", "FullReport", "ScanResult",
    "SufficiencyResult", "VertexData", "full_report", "necessity_scan",
    "pointwise_report", "prepare_vertices", "sufficiency_check",
    "ConeLayout", "DiscretizedCone", "assemble_form", "build_cone",
    "gamma_batch", "omega_p2_batch", "propagate_batch",
    "ClassificationError", "ProbeResult", "QuadraticEvaluation",
    "expansion_probe", "lagrangian_value", "omega", "omega_p", "omega_p2",
    "ClassFlags", "GohMatrices", "HBlocks", "bracket_b_columns",
    "bracket_g_values", "classify_multiplier", "goh_matrices", "h_blocks",
    "lie_bracket_x", "r_cross_check",
    "Multiplier", "MultiplierSet", "endpoint_gradient", "endpoint_hessian",
    "endpoint_weights", "find_multipliers", "integrate_costate",
    "multiplier_residuals",
    "Polynomial", "poly_from_monomials",
    "EndpointMap", "ProblemDef", "ProblemFormatError", "VectorField",
    "parse_problem", "problem_to_doc",
    "available", "get_problem", "reference_trajectory", "registry",
    "Direction", "FeasibilityReport", "GohDirection", "Grid",
    "IntegrationDivergedError", "LinearizedSystem", "Trajectory",
    "cumulative_trapezoid", "deriv4", "feasibility_report", "gamma_order",
    "goh_propagate", "goh_transform_direction", "integrate_linearized",
    "integrate_state", "linearize", "read_trajectory_csv", "trapezoid",
    "write_trajectory_csv",
]
