"""Discrete laboratory for heat flow, Hopf-Lax transforms, Green functions and
sharp Laplacian and perimeter comparison on sampled metric measure spaces."""

from .comparison import (
    ComparisonProfile,
    boundary_representation_report,
    distance_profile,
    equidistant_perimeter_check,
    laplacian_comparison_report,
    minkowski_equals_perimeter,
    signed_distance_report,
    t_KN,
)
from .errors import (
    InvalidParameterError,
    InvalidSpaceError,
    PreconditionError,
    RcdlabError,
    ScenarioError,
    SolverError,
)
from .green import green_distance_check, green_function
from .harness import Report, Scenario, load_scenario, run_scenario
from .heat import HeatOperator, bakry_emery_gap, heat_apply, heat_flow_laplacian, heat_kernel
from .hopf_lax import c_transform, hopf_lax, kuwada_check, preservation_experiment
from .laplacian_bounds import check_upper_bound, cross_validate_senses, distributional_laplacian
from .perimeter import LocalMinProblem, make_set, minimize_in_ball, perimeter
from .regularity import classify_points, flatness, tube_estimate_experiment
from .samplers import ModelSpec, sample_model
from .space import MmSpace, ball, bishop_gromov_ratio, load_space, metric, save_space

__all__ = [
    "ComparisonProfile", "HeatOperator", "InvalidParameterError", "InvalidSpaceError", "LocalMinProblem",
    "MmSpace", "ModelSpec", "PreconditionError", "RcdlabError", "Report", "Scenario", "ScenarioError",
    "SolverError", "bakry_emery_gap", "ball", "bishop_gromov_ratio", "boundary_representation_report",
    "c_transform", "check_upper_bound", "classify_points", "cross_validate_senses", "distance_profile",
    "distributional_laplacian", "equidistant_perimeter_check", "flatness", "green_distance_check",
    "green_function", "heat_apply", "heat_flow_laplacian", "heat_kernel", "hopf_lax", "kuwada_check",
    "laplacian_comparison_report", "load_scenario", "load_space", "make_set", "metric", "minimize_in_ball",
    "minkowski_equals_perimeter", "perimeter", "preservation_experiment", "run_scenario", "sample_model",
    "save_space", "signed_distance_report", "t_KN", "tube_estimate_experiment",
]
