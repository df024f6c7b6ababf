"""Particle swarm search for locally D-optimal designs.

Each particle flies a whole candidate design: ``n_candidate_points`` factor
settings plus one raw weight per point, concatenated into a single position
vector. Discrete coordinates travel as continuous values and are snapped to
levels only when a position is decoded for fitness evaluation. The swarm
stops when it converges to a design whose equivalence-theorem efficiency
bound clears ``eff_bound``; otherwise it restarts (keeping the best design
found so far) up to ``max_resets`` times.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .design import Design
from .errors import ConfigError, RepairFailedError, SingularDesignError
from .glm import ModelSpec, log_det, log_det_batch, model_matrix, psi, information_matrix
from .space import FactorSpace, project_discrete, prune_and_merge, repair, sample_design
from .verify import EquivalenceReport, equivalence_check

MAX_CANDIDATE_POINTS = 64


@dataclass(frozen=True)
class PsoConfig:
    """Tuning parameters for the swarm search."""

    n_particles: int = 30
    max_iter: int = 200
    max_resets: int = 100
    converge_tol: float = 1e-4
    eff_bound: float = 0.99
    phi1: float = 2.0
    phi2: float = 2.0
    inertia_start: float = 0.9
    inertia_step: float = 0.01
    inertia_floor: float = 0.4
    n_candidate_points: int | None = None
    seed: int = 0
    check_resolution: int = 21

    def __post_init__(self):
        if self.n_particles < 1 or self.max_iter < 1 or self.max_resets < 0:
            raise ConfigError("n_particles/max_iter must be positive, max_resets >= 0")
        if self.converge_tol <= 0:
            raise ConfigError("converge_tol must be positive")
        if not 0.0 < self.eff_bound < 1.0:
            raise ConfigError("eff_bound must lie in (0, 1)")
        if self.phi1 <= 0 or self.phi2 <= 0:
            raise ConfigError("phi1 and phi2 must be positive")
        if not self.inertia_start >= self.inertia_floor > 0:
            raise ConfigError("require inertia_start >= inertia_floor > 0")
        if self.n_candidate_points is not None and self.n_candidate_points < 1:
            raise ConfigError("n_candidate_points must be positive")
        if self.check_resolution < 2:
            raise ConfigError("check_resolution must be at least 2")

    def resolve_candidate_points(self, n_factors: int) -> int:
        if self.n_candidate_points is not None:
            return self.n_candidate_points
        return min(2**n_factors, MAX_CANDIDATE_POINTS)


@dataclass
class Particle:
    """Position, velocity, and personal-best state of one swarm member."""

    position: np.ndarray
    velocity: np.ndarray
    pbest_position: np.ndarray
    pbest_value: float


@dataclass
class SearchResult:
    """Final design plus the diagnostics of the search that produced it."""

    design: Design
    criterion: float
    report: EquivalenceReport
    resets_used: int
    iterations_last: int
    trace: np.ndarray


def decode(position: np.ndarray, space: FactorSpace, n_candidate_points: int) -> Design:
    """Turn a position vector into a candidate design.

    The vector is split into per-point rows (coordinates then one raw
    weight); discrete coordinates snap to their nearest level, raw weights
    are clamped at zero and normalized (uniform fallback when all are
    nonpositive). No pruning happens here.
    """
    f = space.n_factors
    block = np.asarray(position, dtype=float).reshape(n_candidate_points, f + 1)
    settings = project_discrete(space, block[:, :f])
    raw = np.maximum(block[:, f], 0.0)
    total = raw.sum()
    if total <= 0.0:
        weights = np.full(n_candidate_points, 1.0 / n_candidate_points)
    else:
        weights = raw / total
    return Design(settings, weights)


def inertia(iteration: int, config: PsoConfig) -> float:
    """Linearly decaying inertia, floored."""
    return max(config.inertia_start - config.inertia_step * iteration, config.inertia_floor)


def velocity_update(
    particle: Particle,
    gbest_position: np.ndarray,
    iteration: int,
    config: PsoConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """New velocity: inertia carry-over plus cognitive and social pulls.

    Draws one uniform vector for the personal-best term and one for the
    global-best term (in that order) from ``rng``.
    """
    dim = particle.position.shape[0]
    u1 = rng.random(dim)
    u2 = rng.random(dim)
    return (
        inertia(iteration, config) * particle.velocity
        + config.phi1 * u1 * (particle.pbest_position - particle.position)
        + config.phi2 * u2 * (gbest_position - particle.position)
    )


def converged(
    positions: np.ndarray,
    gbest_position: np.ndarray,
    scales: np.ndarray,
    tol: float,
) -> bool:
    """True when every particle is within ``tol`` of the global best, with each
    coordinate measured relative to its factor range (weights on unit scale)."""
    dist = np.max(np.abs(positions - gbest_position) / scales, axis=1)
    return bool(dist.max() < tol)


def _position_layout(space: FactorSpace, n_points: int):
    """Per-coordinate box and scale vectors for the flattened position layout."""
    f = space.n_factors
    lo = np.concatenate([space.lower, [0.0]])
    hi = np.concatenate([space.upper, [1.0]])
    scale = np.concatenate([space.ranges, [1.0]])
    box_lo = np.tile(lo, n_points)
    box_hi = np.tile(hi, n_points)
    scales = np.tile(scale, n_points)
    return box_lo, box_hi, scales


def _evaluate_batch(
    positions: np.ndarray,
    space: FactorSpace,
    model: ModelSpec,
    beta: np.ndarray,
    n_points: int,
) -> np.ndarray:
    """Fitness (log-det of the decoded design's information matrix) per particle."""
    s, d = positions.shape
    f = space.n_factors
    block = positions.reshape(s, n_points, f + 1)
    settings = project_discrete(space, block[:, :, :f])
    raw = np.maximum(block[:, :, f], 0.0)
    totals = raw.sum(axis=1)
    degenerate = totals <= 0.0
    weights = np.where(
        degenerate[:, None], 1.0 / n_points, raw / np.where(degenerate, 1.0, totals)[:, None]
    )
    x = model_matrix(model, settings)
    w = weights * psi(model.link, x @ beta)
    mats = np.einsum("sp,spi,spj->sij", w, x, x)
    mats = 0.5 * (mats + np.transpose(mats, (0, 2, 1)))
    return log_det_batch(mats)


def _repair_swarm(
    positions: np.ndarray,
    velocities: np.ndarray,
    space: FactorSpace,
    n_points: int,
    streams: list[np.random.Generator],
) -> None:
    """In-place boundary repair of every flown point, zeroing the velocity of
    each coordinate that moved. Weight coordinates are clamped to [0, 1]."""
    s = positions.shape[0]
    f = space.n_factors
    pos = positions.reshape(s, n_points, f + 1)
    vel = velocities.reshape(s, n_points, f + 1)

    before = pos.copy()
    np.clip(pos[:, :, :f], space.lower, space.upper, out=pos[:, :, :f])
    np.clip(pos[:, :, f], 0.0, 1.0, out=pos[:, :, f])

    if space.constraints:
        coords = pos[:, :, :f].reshape(-1, f)
        bad = ~space.feasible_mask(coords, tol=0.0)
        for flat in np.nonzero(bad)[0]:
            i, p = divmod(int(flat), n_points)
            try:
                fixed, vfix = repair(space, pos[i, p, :f], vel[i, p, :f])
            except RepairFailedError:
                fixed = _resample_setting(space, streams[i])
                vfix = np.zeros(f)
            pos[i, p, :f] = fixed
            vel[i, p, :f] = vfix

    vel[before != pos] = 0.0


def _resample_setting(space: FactorSpace, rng: np.random.Generator) -> np.ndarray:
    return sample_design(space, 1, rng).settings[0]


def _snap_feasible(design: Design, space: FactorSpace) -> Design:
    """Re-run repair on final support points so box and linear constraints
    hold in exact float comparison (weight-averaged merges can drift by one
    ulp), then restore canonical lexicographic ordering."""
    settings = np.clip(design.settings, space.lower, space.upper)
    if space.constraints:
        for i in range(settings.shape[0]):
            settings[i], _ = repair(space, settings[i], np.zeros(space.n_factors))
    order = np.lexsort(settings.T[::-1])
    return Design(settings[order], design.weights[order].copy())


def run_pso(
    model: ModelSpec,
    space: FactorSpace,
    beta: np.ndarray,
    config: PsoConfig,
    iteration_hook: Callable[[int, int, np.ndarray, np.ndarray, float], None] | None = None,
) -> SearchResult:
    """Full search loop: fly swarms, gate on the equivalence theorem, restart
    on failure, and return the passing (or overall best) pruned design.

    ``iteration_hook(reset, iteration, fitness, pbest_values, gbest_value)``
    is called after every iteration when provided; the array arguments are
    live views that keep mutating, so copy them if you retain them. Results
    are deterministic for a fixed ``config.seed``.
    """
    beta = np.asarray(beta, dtype=float).ravel()
    model.validate_against(space.n_factors)
    if beta.shape[0] != model.k:
        raise ConfigError(f"beta has length {beta.shape[0]}, model has k={model.k}")
    n_points = config.resolve_candidate_points(space.n_factors)
    if model.k > n_points:
        raise ConfigError(
            f"model needs k={model.k} parameters but only {n_points} candidate "
            "points are flown; every design would be singular"
        )

    f = space.n_factors
    dim = n_points * (f + 1)
    s = config.n_particles
    box_lo, box_hi, scales = _position_layout(space, n_points)
    vmax = scales / 2.0

    root = np.random.SeedSequence(config.seed)
    streams = [np.random.default_rng(seq) for seq in root.spawn(s)]

    best: tuple[float, Design, EquivalenceReport] | None = None
    trace: list[float] = []
    resets_used = 0
    iterations_last = 0

    for reset in range(config.max_resets + 1):
        resets_used = reset
        positions = np.empty((s, dim))
        for i in range(s):
            init = sample_design(space, n_points, streams[i])
            positions[i] = np.column_stack([init.settings, init.weights]).ravel()
        velocities = np.zeros((s, dim))

        fitness = _evaluate_batch(positions, space, model, beta, n_points)
        pbest_pos = positions.copy()
        pbest_val = fitness.copy()
        g = int(np.argmax(pbest_val))
        gbest_pos = pbest_pos[g].copy()
        gbest_val = float(pbest_val[g])

        for it in range(config.max_iter):
            iterations_last = it + 1
            delta = inertia(it, config)
            u1 = np.stack([rng.random(dim) for rng in streams])
            u2 = np.stack([rng.random(dim) for rng in streams])
            velocities = (
                delta * velocities
                + config.phi1 * u1 * (pbest_pos - positions)
                + config.phi2 * u2 * (gbest_pos - positions)
            )
            np.clip(velocities, -vmax, vmax, out=velocities)
            positions = positions + velocities
            _repair_swarm(positions, velocities, space, n_points, streams)

            fitness = _evaluate_batch(positions, space, model, beta, n_points)
            improved = fitness > pbest_val
            pbest_pos[improved] = positions[improved]
            pbest_val[improved] = fitness[improved]
            g = int(np.argmax(pbest_val))
            if pbest_val[g] > gbest_val:
                gbest_val = float(pbest_val[g])
                gbest_pos = pbest_pos[g].copy()

            running = max(gbest_val, trace[-1]) if trace else gbest_val
            trace.append(running)
            if iteration_hook is not None:
                iteration_hook(reset, it, fitness, pbest_val, gbest_val)
            if converged(positions, gbest_pos, scales, config.converge_tol):
                break

        try:
            design = prune_and_merge(decode(gbest_pos, space, n_points), space)
            design = _snap_feasible(design, space)
            criterion = log_det(information_matrix(design, model, space, beta))
            report = equivalence_check(
                design,
                model,
                space,
                beta,
                resolution=config.check_resolution,
                eff_bound=config.eff_bound,
            )
        except SingularDesignError:
            continue

        if report.lower_bound >= config.eff_bound:
            best = (criterion, design, report)
            break
        if best is None or criterion > best[0]:
            best = (criterion, design, report)

    if best is None:
        raise SingularDesignError("every swarm restart produced a singular design")
    criterion, design, report = best
    return SearchResult(
        design=design,
        criterion=criterion,
        report=report,
        resets_used=resets_used,
        iterations_last=iterations_last,
        trace=np.array(trace),
    )
