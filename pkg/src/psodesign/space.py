"""Factor domains, constraint repair, sampling, grids, and design cleanup.

A factor space is a list of discrete (finite ordered levels) or continuous
(bounded interval) factors, optionally intersected with linear inequality
constraints. During the swarm search discrete coordinates are flown as
continuous values and snapped to the nearest level only when a candidate
design is evaluated or decoded.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .design import Design
from .errors import ConfigError, InfeasibleSpaceError, RepairFailedError

# Feasibility comparisons are made to this tolerance, scaled by the bound size.
FEAS_TOL = 1e-9

_REPAIR_PASSES = 10
_SAMPLE_ATTEMPTS = 1000


@dataclass(frozen=True)
class Factor:
    """One experimental factor: either discrete levels or a continuous interval."""

    name: str
    levels: tuple[float, ...] | None = None
    bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if (self.levels is None) == (self.bounds is None):
            raise ConfigError(
                f"factor {self.name!r} must define exactly one of levels/bounds"
            )
        if self.levels is not None:
            levels = tuple(float(v) for v in self.levels)
            if len(levels) < 2:
                raise ConfigError(f"factor {self.name!r} needs at least 2 levels")
            if any(b <= a for a, b in zip(levels, levels[1:])):
                raise ConfigError(f"factor {self.name!r} levels must be strictly increasing")
            object.__setattr__(self, "levels", levels)
        else:
            lo, hi = (float(v) for v in self.bounds)
            if not lo < hi:
                raise ConfigError(f"factor {self.name!r} bounds must satisfy lo < hi")
            object.__setattr__(self, "bounds", (lo, hi))

    @classmethod
    def discrete(cls, name: str, levels) -> "Factor":
        return cls(name, levels=tuple(levels))

    @classmethod
    def continuous(cls, name: str, lo: float, hi: float) -> "Factor":
        return cls(name, bounds=(lo, hi))

    @property
    def is_discrete(self) -> bool:
        return self.levels is not None

    @property
    def lo(self) -> float:
        return self.levels[0] if self.is_discrete else self.bounds[0]

    @property
    def hi(self) -> float:
        return self.levels[-1] if self.is_discrete else self.bounds[1]

    @property
    def span(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class LinearConstraint:
    """lo <= coeffs . x <= hi over the factor vector x."""

    coeffs: tuple[float, ...]
    lo: float = float("-inf")
    hi: float = float("inf")

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not any(c != 0.0 for c in self.coeffs):
            raise ConfigError("constraint needs at least one nonzero coefficient")
        if not (np.isfinite(self.lo) or np.isfinite(self.hi)):
            raise ConfigError("constraint needs at least one finite bound")
        if self.lo > self.hi:
            raise ConfigError(f"constraint bounds inverted: lo={self.lo} > hi={self.hi}")


@dataclass(frozen=True)
class FactorSpace:
    """Ordered factors plus optional linear inequality constraints."""

    factors: tuple[Factor, ...]
    constraints: tuple[LinearConstraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if not self.factors:
            raise ConfigError("factor space needs at least one factor")
        names = [f.name for f in self.factors]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate factor names in {names}")
        for c in self.constraints:
            if len(c.coeffs) != len(self.factors):
                raise ConfigError(
                    f"constraint has {len(c.coeffs)} coefficients for "
                    f"{len(self.factors)} factors"
                )

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.factors]

    @property
    def lower(self) -> np.ndarray:
        return np.array([f.lo for f in self.factors])

    @property
    def upper(self) -> np.ndarray:
        return np.array([f.hi for f in self.factors])

    @property
    def ranges(self) -> np.ndarray:
        return np.array([f.span for f in self.factors])

    @property
    def discrete_mask(self) -> np.ndarray:
        return np.array([f.is_discrete for f in self.factors])

    def constraint_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(A, lo, hi) such that feasibility means lo <= A x <= hi rowwise."""
        if not self.constraints:
            z = np.zeros((0, self.n_factors))
            return z, np.zeros(0), np.zeros(0)
        a = np.array([c.coeffs for c in self.constraints])
        lo = np.array([c.lo for c in self.constraints])
        hi = np.array([c.hi for c in self.constraints])
        return a, lo, hi

    def feasible_mask(self, settings: np.ndarray, tol: float = FEAS_TOL) -> np.ndarray:
        """Boolean mask of rows satisfying box and linear constraints within tol."""
        settings = np.atleast_2d(np.asarray(settings, dtype=float))
        lo, hi = self.lower, self.upper
        slack = tol * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
        ok = np.all(settings >= lo - slack, axis=1) & np.all(settings <= hi + slack, axis=1)
        a, clo, chi = self.constraint_arrays()
        if a.shape[0]:
            vals = settings @ a.T
            cslack = tol * np.maximum(
                1.0,
                np.maximum(
                    np.where(np.isfinite(clo), np.abs(clo), 0.0),
                    np.where(np.isfinite(chi), np.abs(chi), 0.0),
                ),
            )
            ok &= np.all(vals >= clo - cslack, axis=1) & np.all(vals <= chi + cslack, axis=1)
        return ok

    def check_setting(self, setting: np.ndarray, tol: float = FEAS_TOL) -> None:
        """Raise ConfigError unless the setting is in-domain (levels included)."""
        setting = np.asarray(setting, dtype=float).ravel()
        if setting.shape[0] != self.n_factors:
            raise ConfigError(
                f"setting has {setting.shape[0]} coordinates for {self.n_factors} factors"
            )
        if not bool(self.feasible_mask(setting[None, :], tol)[0]):
            raise ConfigError(f"setting {setting.tolist()} is outside the factor space")
        for i, f in enumerate(self.factors):
            if f.is_discrete:
                gap = np.min(np.abs(np.array(f.levels) - setting[i]))
                if gap > tol * max(1.0, abs(f.span)):
                    raise ConfigError(
                        f"factor {f.name!r} value {setting[i]} is not one of its levels"
                    )


def project_discrete(space: FactorSpace, setting: np.ndarray) -> np.ndarray:
    """Snap discrete coordinates to the nearest level (ties to the lower level).

    Accepts a single setting or any (..., n_factors) batch; continuous
    coordinates pass through unchanged.
    """
    out = np.array(setting, dtype=float)
    for i, f in enumerate(space.factors):
        if not f.is_discrete:
            continue
        levels = np.array(f.levels)
        mids = 0.5 * (levels[:-1] + levels[1:])
        idx = np.searchsorted(mids, out[..., i], side="left")
        out[..., i] = levels[idx]
    return out


def _project_onto_plane(x: np.ndarray, coeffs: np.ndarray, bound: float, upper: bool) -> np.ndarray:
    """Orthogonal projection of x onto {a.x = bound}, aimed a few ulps inside
    the half-space so the inequality holds in exact float comparison no matter
    how a caller re-evaluates the dot product."""
    margin = 4.0 * np.spacing(max(1.0, abs(bound)))
    target = bound - margin if upper else bound + margin
    nrm2 = float(coeffs @ coeffs)
    resid = float(coeffs @ x - target)
    y = x
    for bump in (0.0, 1e-16, 1e-15, 1e-14, 1e-13, 1e-12, 1e-10, 1e-8):
        y = x - coeffs * (resid / nrm2) * (1.0 + bump)
        val = float(coeffs @ y)
        if (val <= bound) if upper else (val >= bound):
            break
    return y


def repair(
    space: FactorSpace, setting: np.ndarray, velocity: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Bring a flown point back into the feasible region.

    Coordinates are clamped to their boxes; while any linear constraint is
    violated, the point is orthogonally projected onto the nearest violated
    constraint boundary and re-clamped (up to 10 passes). Velocity components
    of every coordinate that moved are zeroed. Raises RepairFailedError when
    the passes do not reach feasibility (caller resamples the point).
    """
    x = np.asarray(setting, dtype=float).ravel().copy()
    v = np.asarray(velocity, dtype=float).ravel().copy()
    if x.shape[0] != space.n_factors or v.shape[0] != space.n_factors:
        raise ConfigError("setting/velocity length must equal the factor count")
    x0 = x.copy()
    lo, hi = space.lower, space.upper
    a, clo, chi = space.constraint_arrays()
    np.clip(x, lo, hi, out=x)
    if a.shape[0]:
        norms = np.linalg.norm(a, axis=1)
        for _ in range(_REPAIR_PASSES):
            vals = a @ x
            over = vals > chi
            under = vals < clo
            if not (over.any() or under.any()):
                break
            dist = np.full(len(vals), np.inf)
            dist[over] = (vals[over] - chi[over]) / norms[over]
            dist[under] = (clo[under] - vals[under]) / norms[under]
            c = int(np.argmin(dist))
            bound = chi[c] if over[c] else clo[c]
            x = _project_onto_plane(x, a[c], float(bound), upper=bool(over[c]))
            np.clip(x, lo, hi, out=x)
        vals = a @ x
        if np.any(vals > chi) or np.any(vals < clo):
            raise RepairFailedError("constraint repair did not converge")
    changed = x != x0
    v[changed] = 0.0
    return x, v


def _sample_point(space: FactorSpace, rng: np.random.Generator) -> np.ndarray:
    failures = 0
    lo, hi = space.lower, space.upper
    while True:
        x = np.empty(space.n_factors)
        for i, f in enumerate(space.factors):
            if f.is_discrete:
                x[i] = f.levels[rng.integers(len(f.levels))]
            else:
                x[i] = rng.uniform(f.lo, f.hi)
        try:
            x, _ = repair(space, x, np.zeros_like(x))
            return x
        except RepairFailedError:
            failures += 1
            if failures >= _SAMPLE_ATTEMPTS:
                raise InfeasibleSpaceError(
                    f"no feasible point found after {_SAMPLE_ATTEMPTS} repair attempts"
                ) from None


def sample_design(space: FactorSpace, n_points: int, rng: np.random.Generator) -> Design:
    """Random design: uniform coordinates repaired into the region, uniform raw
    weights normalized to the simplex."""
    if n_points < 1:
        raise ConfigError("n_points must be positive")
    settings = np.empty((n_points, space.n_factors))
    for i in range(n_points):
        settings[i] = _sample_point(space, rng)
    raw = rng.random(n_points)
    return Design(settings, raw / raw.sum())


def ensure_nonempty(space: FactorSpace) -> None:
    """Raise InfeasibleSpaceError unless a feasible point can be produced."""
    _sample_point(space, np.random.default_rng(0))


def _grid_axes(space: FactorSpace, resolution: int) -> list[np.ndarray]:
    if resolution < 2:
        raise ConfigError("grid resolution must be at least 2")
    axes = []
    for f in space.factors:
        if f.is_discrete:
            axes.append(np.array(f.levels))
        else:
            axes.append(np.linspace(f.lo, f.hi, resolution))
    return axes


def _cartesian(axes: list[np.ndarray]) -> np.ndarray:
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def grid_size(space: FactorSpace, resolution: int) -> int:
    """Number of grid settings before constraint filtering."""
    return int(np.prod([len(ax) for ax in _grid_axes(space, resolution)]))


def iter_grid_blocks(space: FactorSpace, resolution: int) -> Iterator[np.ndarray]:
    """Constraint-filtered grid in lexicographic order, one block per value of
    the first factor (bounds memory on large grids)."""
    axes = _grid_axes(space, resolution)
    rest = axes[1:]
    tail = _cartesian(rest) if rest else None
    for v in axes[0]:
        if tail is not None:
            block = np.column_stack([np.full(len(tail), v), tail])
        else:
            block = np.array([[v]])
        if space.constraints:
            block = block[space.feasible_mask(block)]
        if len(block):
            yield block


def grid_matrix(space: FactorSpace, resolution: int) -> np.ndarray:
    """Verification grid as one array, lexicographic order, constraint-filtered."""
    blocks = list(iter_grid_blocks(space, resolution))
    if not blocks:
        return np.zeros((0, space.n_factors))
    return np.vstack(blocks)


def verification_grid(space: FactorSpace, resolution: int) -> Iterator[np.ndarray]:
    """Stream the verification grid settings lazily, in lexicographic order."""
    for block in iter_grid_blocks(space, resolution):
        yield from block


def prune_and_merge(
    design: Design,
    space: FactorSpace,
    weight_tol: float = 1e-4,
    dist_tol: float = 1e-2,
) -> Design:
    """Drop negligible-weight points and coalesce near-duplicates.

    Points with weight below ``weight_tol`` are removed; pairs whose settings
    differ by less than ``dist_tol`` of the factor range in every coordinate
    are merged into a weight-averaged setting carrying their summed weight.
    The result is renormalized and returned in lexicographic setting order.
    """
    w = design.weights.copy()
    s = design.settings.copy()
    keep = w >= weight_tol
    if not keep.any():
        raise ConfigError("pruning removed every design point")
    w, s = w[keep], s[keep]
    ranges = space.ranges
    while len(w) > 1:
        scaled = s / ranges
        diff = np.max(np.abs(scaled[:, None, :] - scaled[None, :, :]), axis=2)
        np.fill_diagonal(diff, np.inf)
        i, j = np.unravel_index(np.argmin(diff), diff.shape)
        if diff[i, j] >= dist_tol:
            break
        i, j = min(i, j), max(i, j)
        total = w[i] + w[j]
        s[i] = (w[i] * s[i] + w[j] * s[j]) / total
        w[i] = total
        s = np.delete(s, j, axis=0)
        w = np.delete(w, j)
    s = project_discrete(space, s)
    w = w / w.sum()
    order = np.lexsort(s.T[::-1])
    return Design(s[order], w[order])
