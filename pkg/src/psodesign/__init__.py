"""Locally D-optimal designs for binary-response GLMs with mixed factors,
searched by particle swarm optimization and certified by the equivalence
theorem."""

from .baselines import CandidateSet, effective_support, fedorov_wynn, multiplicative
from .design import Design, uniform_design
from .errors import (
    ConfigError,
    InfeasibleSpaceError,
    PsoDesignError,
    RepairFailedError,
    SingularDesignError,
)
from .glm import (
    LINKS,
    ModelSpec,
    d_efficiency,
    efficiency_lower_bound,
    information_matrix,
    log_det,
    model_matrix,
    model_vector,
    mu,
    psi,
    sensitivity,
)
from .io import load_design, save_design_csv, save_design_json
from .problems import ProblemConfig, list_presets, load_problem, problem_from_dict
from .pso import Particle, PsoConfig, SearchResult, converged, decode, inertia, run_pso, velocity_update
from .space import (
    Factor,
    FactorSpace,
    LinearConstraint,
    grid_matrix,
    grid_size,
    project_discrete,
    prune_and_merge,
    repair,
    sample_design,
    verification_grid,
)
from .verify import (
    EquivalenceReport,
    boundary_support,
    efficiency_under_link,
    equivalence_check,
    minimal_support_classify,
    sensitivity_profile,
)

__version__ = "0.1.0"

__all__ = [
    "CandidateSet",
    "ConfigError",
    "Design",
    "EquivalenceReport",
    "Factor",
    "FactorSpace",
    "InfeasibleSpaceError",
    "LINKS",
    "LinearConstraint",
    "ModelSpec",
    "Particle",
    "ProblemConfig",
    "PsoConfig",
    "PsoDesignError",
    "RepairFailedError",
    "SearchResult",
    "SingularDesignError",
    "boundary_support",
    "converged",
    "d_efficiency",
    "decode",
    "effective_support",
    "efficiency_lower_bound",
    "efficiency_under_link",
    "equivalence_check",
    "fedorov_wynn",
    "grid_matrix",
    "grid_size",
    "inertia",
    "information_matrix",
    "list_presets",
    "load_design",
    "load_problem",
    "log_det",
    "minimal_support_classify",
    "model_matrix",
    "model_vector",
    "mu",
    "multiplicative",
    "problem_from_dict",
    "project_discrete",
    "prune_and_merge",
    "psi",
    "repair",
    "run_pso",
    "sample_design",
    "save_design_csv",
    "save_design_json",
    "sensitivity",
    "sensitivity_profile",
    "uniform_design",
    "velocity_update",
    "verification_grid",
]
