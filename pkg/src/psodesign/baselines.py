"""Candidate-set weight optimizers used as independent cross-checks.

Both algorithms optimize only the weight distribution over a fixed, finite
candidate set of settings. They serve as oracles for the swarm search on
discretized spaces: the continuous-space optimum must dominate any
grid-restricted optimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError
from .glm import ModelSpec, model_matrix, psi
from .space import FactorSpace


@dataclass
class CandidateSet:
    """Finite settings plus the model context; caches model vectors and weights."""

    settings: np.ndarray
    model: ModelSpec
    space: FactorSpace
    beta: np.ndarray
    x: np.ndarray = field(init=False, repr=False)
    psi_vals: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.settings = np.atleast_2d(np.asarray(self.settings, dtype=float))
        self.beta = np.asarray(self.beta, dtype=float).ravel()
        if self.beta.shape[0] != self.model.k:
            raise ConfigError(
                f"beta has length {self.beta.shape[0]}, model has k={self.model.k}"
            )
        if self.settings.shape[1] != self.space.n_factors:
            raise ConfigError("candidate settings do not match the factor count")
        self.x = model_matrix(self.model, self.settings)
        self.psi_vals = np.asarray(psi(self.model.link, self.x @ self.beta))

    @property
    def n(self) -> int:
        return self.settings.shape[0]

    def information(self, weights: np.ndarray) -> np.ndarray:
        w = weights * self.psi_vals
        m = (self.x * w[:, None]).T @ self.x
        return 0.5 * (m + m.T)

    def variances(self, m_inv: np.ndarray) -> np.ndarray:
        """d_i = Psi_i x_i' M^{-1} x_i for every candidate."""
        return self.psi_vals * np.einsum("ij,jk,ik->i", self.x, m_inv, self.x)


def _inverse_or_raise(cands: CandidateSet, weights: np.ndarray) -> np.ndarray:
    m = cands.information(weights)
    try:
        return np.linalg.inv(m)
    except np.linalg.LinAlgError:
        raise ConfigError("candidate set is degenerate: singular information matrix")


def multiplicative(
    cands: CandidateSet,
    max_iter: int = 10000,
    tol: float = 1e-9,
    callback: Callable[[np.ndarray], None] | None = None,
) -> np.ndarray:
    """Multiplicative weight iteration w_i <- w_i d_i / k from uniform start.

    Stops when the largest weight change, relative to the largest weight,
    drops below ``tol``. The D-criterion is nondecreasing along the path and
    no weight is ever set exactly to zero.
    """
    if cands.n < cands.model.k:
        raise ConfigError("need at least k candidates")
    k = cands.model.k
    w = np.full(cands.n, 1.0 / cands.n)
    for _ in range(max_iter):
        d = cands.variances(_inverse_or_raise(cands, w))
        w_new = w * d / k
        w_new /= w_new.sum()
        if callback is not None:
            callback(w_new)
        if np.max(np.abs(w_new - w)) / np.max(w_new) < tol:
            w = w_new
            break
        w = w_new
    return w


def fedorov_wynn(
    cands: CandidateSet,
    max_iter: int = 10000,
    tol: float = 1e-4,
    callback: Callable[[np.ndarray], None] | None = None,
) -> np.ndarray:
    """Wynn exchange: mix toward the max-variance candidate with the closed-form
    D-optimal step, from uniform start.

    Stops when max_i d_i / k - 1 < ``tol`` (the equivalence-theorem excess).
    Ties in the variance scan break toward the lowest candidate index.
    """
    if cands.n < cands.model.k:
        raise ConfigError("need at least k candidates")
    k = cands.model.k
    w = np.full(cands.n, 1.0 / cands.n)
    for _ in range(max_iter):
        d = cands.variances(_inverse_or_raise(cands, w))
        j = int(np.argmax(d))
        dj = float(d[j])
        if dj / k - 1.0 < tol:
            break
        alpha = (dj / k - 1.0) / (dj - 1.0)
        w = (1.0 - alpha) * w
        w[j] += alpha
        w /= w.sum()
        if callback is not None:
            callback(w)
    return w


def effective_support(weights: np.ndarray, tol: float = 1e-6) -> int:
    """Support count after discarding numerically negligible weights."""
    return int(np.sum(np.asarray(weights) > tol))
