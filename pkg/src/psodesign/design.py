"""Weighted-support designs: a finite set of factor settings with probability weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

WEIGHT_SUM_TOL = 1e-12


@dataclass
class Design:
    """An approximate design: settings (m, n_factors) with weights on the simplex.

    Weights represent the proportion of the experimental budget assigned to
    each setting; they must be nonnegative and sum to one.
    """

    settings: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        self.settings = np.atleast_2d(np.asarray(self.settings, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.settings.shape[0] != self.weights.shape[0]:
            raise ConfigError(
                f"design has {self.settings.shape[0]} settings but "
                f"{self.weights.shape[0]} weights"
            )
        if self.weights.size == 0:
            raise ConfigError("design must contain at least one point")

    @property
    def n_points(self) -> int:
        return self.settings.shape[0]

    @property
    def n_factors(self) -> int:
        return self.settings.shape[1]

    def support_size(self, weight_tol: float = 0.0) -> int:
        """Number of points carrying weight above ``weight_tol``."""
        return int(np.sum(self.weights > weight_tol))

    def check_weights(self, tol: float = WEIGHT_SUM_TOL) -> None:
        """Raise unless weights are nonnegative and sum to one within ``tol``."""
        if np.any(self.weights < -tol):
            raise ConfigError("design weights must be nonnegative")
        if abs(float(self.weights.sum()) - 1.0) > tol:
            raise ConfigError(
                f"design weights sum to {self.weights.sum()!r}, expected 1"
            )

    def normalized(self) -> "Design":
        """Return a copy with weights rescaled to sum to exactly one."""
        total = float(self.weights.sum())
        if total <= 0:
            raise ConfigError("cannot normalize nonpositive total weight")
        return Design(self.settings.copy(), self.weights / total)


def uniform_design(settings: np.ndarray) -> Design:
    """Design placing equal weight on every row of ``settings``."""
    settings = np.atleast_2d(np.asarray(settings, dtype=float))
    m = settings.shape[0]
    return Design(settings, np.full(m, 1.0 / m))
