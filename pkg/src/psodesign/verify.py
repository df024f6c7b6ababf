"""Optimality verification and robustness evaluation.

Implements the two-phase equivalence-theorem check (support points first,
then the full verification grid), the guaranteed-efficiency lower bound
derived from the worst sensitivity excess, efficiency under a misspecified
link, and support-structure classifiers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import Design
from .errors import SingularDesignError
from .glm import (
    ModelSpec,
    efficiency_lower_bound,
    d_efficiency,
    information_matrix,
    log_det,
    model_matrix,
    sensitivity_values,
    NEG_INF,
)
from .space import FactorSpace, grid_matrix, iter_grid_blocks

DEFAULT_RESOLUTION = 101


@dataclass
class EquivalenceReport:
    """Outcome of an equivalence-theorem check.

    theta is the maximum positive sensitivity excess over the scanned
    settings (clamped at zero), lower_bound = exp(-theta/k) the guaranteed
    D-efficiency, and support_residuals the sensitivity at each support
    point (all near zero for an optimal design).
    """

    theta: float
    argmax_setting: np.ndarray
    lower_bound: float
    passed: bool
    support_residuals: np.ndarray
    eff_bound: float


def equivalence_check(
    design: Design,
    model: ModelSpec,
    space: FactorSpace,
    beta: np.ndarray,
    resolution: int = DEFAULT_RESOLUTION,
    eff_bound: float = 0.99,
) -> EquivalenceReport:
    """Scan support points plus the verification grid for positive sensitivity."""
    beta = np.asarray(beta, dtype=float).ravel()
    m = information_matrix(design, model, space, beta)
    if log_det(m) == NEG_INF:
        raise SingularDesignError("cannot verify a singular design")
    m_inv = np.linalg.inv(m)

    x_support = model_matrix(model, design.settings)
    support_residuals = sensitivity_values(x_support, m_inv, beta, model)

    best = float("-inf")
    argmax_setting = design.settings[0]
    for block in iter_grid_blocks(space, resolution):
        sens = sensitivity_values(model_matrix(model, block), m_inv, beta, model)
        arg = int(np.argmax(sens))
        if sens[arg] > best:
            best = float(sens[arg])
            argmax_setting = block[arg]
    arg = int(np.argmax(support_residuals))
    if support_residuals[arg] > best:
        best = float(support_residuals[arg])
        argmax_setting = design.settings[arg]
    theta = max(0.0, best)
    lower = efficiency_lower_bound(theta, model.k)
    return EquivalenceReport(
        theta=theta,
        argmax_setting=np.array(argmax_setting, dtype=float),
        lower_bound=lower,
        passed=lower >= eff_bound,
        support_residuals=support_residuals,
        eff_bound=eff_bound,
    )


def sensitivity_profile(
    design: Design,
    model: ModelSpec,
    space: FactorSpace,
    beta: np.ndarray,
    resolution: int = DEFAULT_RESOLUTION,
) -> tuple[np.ndarray, np.ndarray]:
    """(grid settings, sensitivity values) rows for plotting/export."""
    beta = np.asarray(beta, dtype=float).ravel()
    m = information_matrix(design, model, space, beta)
    if log_det(m) == NEG_INF:
        raise SingularDesignError("cannot profile a singular design")
    m_inv = np.linalg.inv(m)
    grid = grid_matrix(space, resolution)
    sens = sensitivity_values(model_matrix(model, grid), m_inv, beta, model)
    return grid, sens


def efficiency_under_link(
    design: Design,
    model: ModelSpec,
    true_link: str,
    space: FactorSpace,
    beta: np.ndarray,
    pso_config,
) -> float:
    """D-efficiency of ``design`` against a fresh optimum under ``true_link``.

    Both information matrices are evaluated with the true link; the
    comparison design is found by a new swarm search.
    """
    from .pso import run_pso

    model_true = model.with_link(true_link)
    result = run_pso(model_true, space, beta, pso_config)
    return d_efficiency(design, result.design, model_true, space, beta)


def minimal_support_classify(design: Design, k: int, weight_tol: float = 1e-4) -> bool:
    """True when the (pruned) design has exactly k support points."""
    return design.support_size(weight_tol) == k


def boundary_support(design: Design, space: FactorSpace, tol: float = 1e-9) -> bool:
    """True when every continuous coordinate of every support point sits at a
    box endpoint."""
    for i, f in enumerate(space.factors):
        if f.is_discrete:
            continue
        col = design.settings[:, i]
        at_edge = (np.abs(col - f.lo) <= tol * max(1.0, abs(f.span))) | (
            np.abs(col - f.hi) <= tol * max(1.0, abs(f.span))
        )
        if not at_edge.all():
            return False
    return True
