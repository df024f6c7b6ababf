"""Binary-response GLM primitives.

Inverse links, the per-observation information weight, model vectors,
Fisher information matrices, and the D-criterion quantities built on them
(log-determinant, sensitivity function, efficiency measures).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit, ndtr

from .design import Design
from .errors import ConfigError, SingularDesignError

LINKS = ("logit", "probit", "cloglog", "loglog")

# Probabilities are kept away from {0, 1} so mu*(1-mu) stays positive for
# |eta| beyond ~35; the information weight is floored for the same reason.
PROB_CLIP = 1e-12
_PSI_FLOOR = 1e-300

# Relative pivot threshold below which a symmetric matrix is treated as
# singular by log_det.
PIVOT_RTOL = 1e-12

NEG_INF = float("-inf")

_SQRT_2PI = float(np.sqrt(2.0 * np.pi))


def _check_eta(eta: np.ndarray) -> None:
    if not np.all(np.isfinite(eta)):
        raise ConfigError("linear predictor eta must be finite")


def mu(link: str, eta) -> float | np.ndarray:
    """Inverse-link mean response, clipped to [PROB_CLIP, 1 - PROB_CLIP].

    Strictly increasing in eta for logit and probit; strictly decreasing for
    cloglog and loglog. The two log-log-family links are mirror images of
    each other in eta (their information weights satisfy
    psi_cloglog(eta) = psi_loglog(-eta)), which is what makes designs built
    under them distinguishable.
    """
    eta_arr = np.asarray(eta, dtype=float)
    _check_eta(eta_arr)
    with np.errstate(over="ignore"):
        if link == "logit":
            out = expit(eta_arr)
        elif link == "probit":
            out = ndtr(eta_arr)
        elif link == "cloglog":
            out = -np.expm1(-np.exp(-eta_arr))
        elif link == "loglog":
            out = np.exp(-np.exp(eta_arr))
        else:
            raise ConfigError(f"unknown link {link!r}; expected one of {LINKS}")
    out = np.clip(out, PROB_CLIP, 1.0 - PROB_CLIP)
    return float(out) if np.isscalar(eta) or np.ndim(eta) == 0 else out


def _dmu_deta(link: str, eta_arr: np.ndarray) -> np.ndarray:
    """Derivative of the mean with respect to eta (sign included)."""
    with np.errstate(over="ignore"):
        if link == "logit":
            p = expit(eta_arr)
            return p * (1.0 - p)
        if link == "probit":
            return np.exp(-0.5 * eta_arr**2) / _SQRT_2PI
        if link == "cloglog":
            return -np.exp(-eta_arr - np.exp(-eta_arr))
        if link == "loglog":
            return -np.exp(eta_arr - np.exp(eta_arr))
    raise ConfigError(f"unknown link {link!r}; expected one of {LINKS}")


def psi(link: str, eta) -> float | np.ndarray:
    """GLM information weight (dmu/deta)^2 / (mu (1 - mu)) for a binary response.

    Strictly positive; equals exp(eta) / (1 + exp(eta))^2 for the logit link.
    """
    eta_arr = np.asarray(eta, dtype=float)
    _check_eta(eta_arr)
    if link == "logit":
        # (mu(1-mu))^2 / (mu(1-mu)) collapses to sigma(eta) * sigma(-eta)
        out = expit(eta_arr) * expit(-eta_arr)
    else:
        p = mu(link, eta_arr)
        d = _dmu_deta(link, eta_arr)
        out = d * d / (p * (1.0 - p))
    out = np.maximum(out, _PSI_FLOOR)
    return float(out) if np.isscalar(eta) or np.ndim(eta) == 0 else out


@dataclass(frozen=True)
class ModelSpec:
    """Linear-predictor layout for a binary GLM.

    Terms are ordered deterministically: intercept, then main effects in
    declaration order, then pairwise interactions in declaration order.
    Interaction terms multiply the two referenced factor values.
    """

    intercept: bool
    main_effects: tuple[int, ...]
    interactions: tuple[tuple[int, int], ...] = ()
    link: str = "logit"

    def __post_init__(self):
        object.__setattr__(self, "main_effects", tuple(int(i) for i in self.main_effects))
        object.__setattr__(
            self, "interactions", tuple((int(a), int(b)) for a, b in self.interactions)
        )
        if self.link not in LINKS:
            raise ConfigError(f"unknown link {self.link!r}; expected one of {LINKS}")
        for a, b in self.interactions:
            if a == b:
                raise ConfigError(f"interaction ({a}, {b}) must reference two distinct factors")

    @property
    def k(self) -> int:
        """Number of model parameters."""
        return int(self.intercept) + len(self.main_effects) + len(self.interactions)

    def with_link(self, link: str) -> "ModelSpec":
        return replace(self, link=link)

    def validate_against(self, n_factors: int) -> None:
        referenced = set(self.main_effects) | {i for pair in self.interactions for i in pair}
        bad = [i for i in referenced if not 0 <= i < n_factors]
        if bad:
            raise ConfigError(f"model references unknown factor indices {sorted(bad)}")
        if self.k == 0:
            raise ConfigError("model has no terms")


def model_matrix(model: ModelSpec, settings: np.ndarray) -> np.ndarray:
    """Model vectors for a batch of settings, shape (..., k).

    Does not validate domain membership; use :func:`model_vector` for single
    checked evaluations.
    """
    settings = np.asarray(settings, dtype=float)
    cols = []
    if model.intercept:
        cols.append(np.ones(settings.shape[:-1]))
    for i in model.main_effects:
        cols.append(settings[..., i])
    for a, b in model.interactions:
        cols.append(settings[..., a] * settings[..., b])
    return np.stack(cols, axis=-1)


def model_vector(model: ModelSpec, space, setting) -> np.ndarray:
    """Model vector x for one factor setting, after domain validation."""
    setting = np.asarray(setting, dtype=float).ravel()
    if setting.shape[0] != space.n_factors:
        raise ConfigError(
            f"setting has {setting.shape[0]} coordinates, space has {space.n_factors} factors"
        )
    model.validate_against(space.n_factors)
    space.check_setting(setting)
    return model_matrix(model, setting)


def information_matrix(
    design: Design, model: ModelSpec, space, beta: np.ndarray
) -> np.ndarray:
    """Fisher information sum_i p_i Psi(x_i' beta) x_i x_i' of an approximate design."""
    beta = np.asarray(beta, dtype=float).ravel()
    if beta.shape[0] != model.k:
        raise ConfigError(f"beta has length {beta.shape[0]}, model has k={model.k}")
    if design.n_factors != space.n_factors:
        raise ConfigError(
            f"design has {design.n_factors} factors, space has {space.n_factors}"
        )
    x = model_matrix(model, design.settings)
    return _information_from_parts(x, design.weights, x @ beta, model.link)


def _information_from_parts(
    x: np.ndarray, weights: np.ndarray, eta: np.ndarray, link: str
) -> np.ndarray:
    w = weights * psi(link, eta)
    m = (x * w[:, None]).T @ x
    return 0.5 * (m + m.T)


def log_det(m: np.ndarray) -> float:
    """Log-determinant of a symmetric PSD matrix via pivoted Cholesky.

    Returns -inf when any pivot falls below PIVOT_RTOL relative to the
    largest initial diagonal entry (singular or indefinite input).
    """
    m = np.asarray(m, dtype=float)
    return float(log_det_batch(m[None, :, :])[0])


def log_det_batch(mats: np.ndarray) -> np.ndarray:
    """Vectorized :func:`log_det` over a stack of matrices, shape (n, k, k)."""
    a = np.array(mats, dtype=float)
    n, k, _ = a.shape
    rows = np.arange(n)
    diag0 = np.abs(np.diagonal(a, axis1=1, axis2=2)).max(axis=1)
    singular = diag0 <= 0.0
    thresh = PIVOT_RTOL * np.where(singular, 1.0, diag0)
    out = np.zeros(n)
    for j in range(k):
        diag = np.diagonal(a, axis1=1, axis2=2)
        p = j + np.argmax(diag[:, j:], axis=1)
        swap = p != j
        if np.any(swap):
            idx = rows[swap]
            pj = p[swap]
            a[idx, j, :], a[idx, pj, :] = a[idx, pj, :].copy(), a[idx, j, :].copy()
            a[idx, :, j], a[idx, :, pj] = a[idx, :, pj].copy(), a[idx, :, j].copy()
        piv = a[:, j, j].copy()
        singular |= piv <= thresh
        piv_safe = np.where(singular, 1.0, piv)
        out += np.where(singular, 0.0, np.log(piv_safe))
        if j + 1 < k:
            col = a[:, j + 1 :, j].copy()
            a[:, j + 1 :, j + 1 :] -= (
                col[:, :, None] * col[:, None, :] / piv_safe[:, None, None]
            )
    out[singular] = NEG_INF
    return out


def _solve_information(m: np.ndarray) -> np.ndarray:
    """Inverse of an information matrix; raises SingularDesignError when degenerate."""
    if log_det(m) == NEG_INF:
        raise SingularDesignError("design information matrix is singular")
    return np.linalg.inv(m)


def sensitivity(setting, design: Design, model: ModelSpec, space, beta) -> float:
    """Sensitivity function Psi(x' beta) x' M^{-1} x - k at one setting.

    Nonpositive everywhere exactly when the design is D-optimal, with
    equality at its support points.
    """
    beta = np.asarray(beta, dtype=float).ravel()
    m = information_matrix(design, model, space, beta)
    m_inv = _solve_information(m)
    x = model_vector(model, space, setting)
    return float(sensitivity_values(x[None, :], m_inv, beta, model)[0])


def sensitivity_values(
    x: np.ndarray, m_inv: np.ndarray, beta: np.ndarray, model: ModelSpec
) -> np.ndarray:
    """Sensitivity at many model vectors (rows of ``x``) given a precomputed inverse."""
    quad = np.einsum("ij,jk,ik->i", x, m_inv, x)
    return psi(model.link, x @ beta) * quad - model.k


def d_efficiency(design: Design, reference: Design, model: ModelSpec, space, beta) -> float:
    """Relative D-efficiency (det I_design / det I_reference)^(1/k).

    Zero when the design is singular; may exceed one if the reference is
    suboptimal.
    """
    ld_ref = log_det(information_matrix(reference, model, space, beta))
    if ld_ref == NEG_INF:
        raise ConfigError("reference design is singular")
    ld = log_det(information_matrix(design, model, space, beta))
    if ld == NEG_INF:
        return 0.0
    return float(np.exp((ld - ld_ref) / model.k))


def efficiency_lower_bound(theta: float, k: int) -> float:
    """Guaranteed D-efficiency exp(-theta/k) from the max sensitivity excess theta."""
    if theta < 0:
        raise ConfigError(f"theta must be nonnegative, got {theta}")
    if k <= 0:
        raise ConfigError(f"k must be positive, got {k}")
    return float(np.exp(-theta / k))
