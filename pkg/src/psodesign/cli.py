"""Command-line interface: find / verify / efficiency / benchmark / sweep.

Exit codes are a stable scripting contract: 0 success (or verification
pass), 1 verification failure, 2 configuration error, 3 numerical failure.
All commands are deterministic for a fixed --seed; the PSODESIGN_WORKERS
environment variable parallelizes benchmark and sweep cells without
changing their results (each cell owns a seed derived from its index).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .baselines import CandidateSet, effective_support, fedorov_wynn, multiplicative
from .design import Design, uniform_design
from .errors import ConfigError, PsoDesignError, SingularDesignError
from .glm import ModelSpec, d_efficiency, information_matrix, log_det
from .io import load_design, save_design_csv, save_design_json
from .problems import ProblemConfig, load_problem
from .pso import PsoConfig, run_pso
from .space import Factor, FactorSpace, grid_matrix
from .verify import efficiency_under_link, equivalence_check, minimal_support_classify, sensitivity_profile

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("PSODESIGN_WORKERS", "1")))
    except ValueError:
        return 1


def _apply_overrides(config: PsoConfig, args) -> PsoConfig:
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if getattr(args, "particles", None) is not None:
        updates["n_particles"] = args.particles
    if getattr(args, "max_iter", None) is not None:
        updates["max_iter"] = args.max_iter
    if getattr(args, "max_resets", None) is not None:
        updates["max_resets"] = args.max_resets
    if getattr(args, "eff_bound", None) is not None:
        updates["eff_bound"] = args.eff_bound
    if getattr(args, "resolution", None) is not None:
        updates["check_resolution"] = args.resolution
    if getattr(args, "candidate_points", None) is not None:
        updates["n_candidate_points"] = args.candidate_points
    return dataclasses.replace(config, **updates) if updates else config


def _format_design_table(design: Design, names: list[str]) -> str:
    header = "".join(f"{n:>14}" for n in names) + f"{'weight':>14}"
    lines = [header]
    for row, w in zip(design.settings, design.weights):
        lines.append("".join(f"{v:>14.4f}" for v in row) + f"{w:>14.4f}")
    return "\n".join(lines)


def _print_report(report) -> None:
    print(f"theta (max sensitivity excess): {report.theta:.6f}")
    print(f"efficiency lower bound: {report.lower_bound:.6f}")
    print(f"max |support residual|: {np.max(np.abs(report.support_residuals)):.6f}")
    print(f"equivalence pass: {'yes' if report.passed else 'no'} (bound {report.eff_bound:g})")


def cmd_find(args) -> int:
    problem = load_problem(args.problem)
    config = _apply_overrides(problem.pso, args)
    result = run_pso(problem.model, problem.space, problem.beta, config)
    print(f"problem: {problem.name} (k={problem.model.k}, {problem.space.n_factors} factors)")
    print("support points (after pruning):")
    print(_format_design_table(result.design, problem.space.names))
    print(f"criterion (log-det): {result.criterion:.6f}")
    _print_report(result.report)
    print(f"resets used: {result.resets_used}   iterations (last reset): {result.iterations_last}")
    if args.out:
        prefix = Path(args.out)
        save_design_json(prefix.with_suffix(".json"), result.design, problem.space.names,
                         description=f"design found for problem {problem.name}")
        save_design_csv(prefix.with_suffix(".csv"), result.design, problem.space.names)
        print(f"wrote {prefix.with_suffix('.json')} and {prefix.with_suffix('.csv')}")
    return EXIT_OK if result.report.passed else EXIT_VERIFY_FAIL


def cmd_verify(args) -> int:
    problem = load_problem(args.problem)
    design, _ = load_design(args.design)
    design = design.normalized()
    resolution = args.resolution if args.resolution is not None else 101
    eff_bound = args.eff_bound if args.eff_bound is not None else 0.99
    report = equivalence_check(
        design, problem.model, problem.space, problem.beta,
        resolution=resolution, eff_bound=eff_bound,
    )
    criterion = log_det(information_matrix(design, problem.model, problem.space, problem.beta))
    print(f"problem: {problem.name}   design: {args.design}")
    print(f"criterion (log-det): {criterion:.9f}")
    _print_report(report)
    if args.out:
        grid, sens = sensitivity_profile(
            design, problem.model, problem.space, problem.beta, resolution=resolution
        )
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(problem.space.names + ["sensitivity"])
            for row, val in zip(grid, sens):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(val))])
        print(f"wrote sensitivity profile to {args.out}")
    return EXIT_OK if report.passed else EXIT_VERIFY_FAIL


def cmd_efficiency(args) -> int:
    problem = load_problem(args.problem)
    design, _ = load_design(args.design)
    reference, _ = load_design(args.reference)
    value = d_efficiency(
        design.normalized(), reference.normalized(),
        problem.model, problem.space, problem.beta,
    )
    print(f"d-efficiency: {value:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

_FAMILIES = ("2x2", "2x3", "2x4", "cont2")


def _family_problem(family: str) -> tuple[FactorSpace, ModelSpec]:
    if family in ("2x2", "2x3", "2x4"):
        f = int(family[-1])
        space = FactorSpace(tuple(Factor.discrete(f"x{i+1}", (-1, 1)) for i in range(f)))
    elif family == "cont2":
        space = FactorSpace((Factor.continuous("x1", -1, 1), Factor.continuous("x2", -1, 1)))
        f = 2
    else:
        raise ConfigError(f"unknown family {family!r}; expected one of {_FAMILIES}")
    model = ModelSpec(intercept=True, main_effects=tuple(range(f)), link="logit")
    return space, model


def _cell_seed(base: int, *idx: int) -> int:
    return int(np.random.SeedSequence([base, *idx]).generate_state(1)[0])


def _benchmark_cell(task: tuple) -> dict:
    family, index, base_seed, algorithms, grid_resolution = task
    space, model = _family_problem(family)
    rng = np.random.default_rng(np.random.SeedSequence([base_seed, index]))
    beta = rng.uniform(-3.0, 3.0, model.k)
    out: dict = {"index": index, "beta": beta}
    cands = None
    if {"multiplicative", "fedorov_wynn"} & set(algorithms):
        cands = CandidateSet(grid_matrix(space, grid_resolution), model, space, beta)
    for alg in algorithms:
        t0 = time.perf_counter()
        if alg == "pso":
            config = PsoConfig(
                n_particles=25, max_iter=150, max_resets=200, converge_tol=1e-5,
                eff_bound=0.999, seed=_cell_seed(base_seed, index, 1), check_resolution=21,
            )
            result = run_pso(model, space, beta, config)
            crit, support = result.criterion, result.design.n_points
        elif alg == "multiplicative":
            w = multiplicative(cands)
            crit = log_det(cands.information(w))
            support = effective_support(w)
        elif alg == "fedorov_wynn":
            w = fedorov_wynn(cands)
            crit = log_det(cands.information(w))
            support = effective_support(w)
        else:
            raise ConfigError(f"unknown algorithm {alg!r}")
        out[alg] = {"criterion": crit, "support": support, "seconds": time.perf_counter() - t0}
    return out


def cmd_benchmark(args) -> int:
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    for alg in algorithms:
        if alg not in ("pso", "multiplicative", "fedorov_wynn"):
            raise ConfigError(f"unknown algorithm {alg!r}")
    tasks = [
        (args.family, i, args.seed, tuple(algorithms), args.resolution)
        for i in range(args.n_problems)
    ]
    workers = _workers()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_benchmark_cell, tasks))
    else:
        results = [_benchmark_cell(t) for t in tasks]
    results.sort(key=lambda r: r["index"])

    print(f"family: {args.family}   problems: {args.n_problems}   seed: {args.seed}")
    print(f"algorithms: {', '.join(algorithms)}")
    counts = {alg: [r[alg]["support"] for r in results] for alg in algorithms}
    print("support-count summary (min/median/max):")
    for alg in algorithms:
        c = np.array(counts[alg])
        print(f"  {alg:>15}: {c.min()} / {np.median(c):g} / {c.max()}")
        hist: dict[int, int] = {}
        for v in c:
            hist[int(v)] = hist.get(int(v), 0) + 1
        line = "  ".join(f"{k}:{v}" for k, v in sorted(hist.items()))
        print(f"  {alg:>15}  histogram: {line}")
    if "pso" in algorithms:
        for alg in algorithms:
            if alg == "pso":
                continue
            ok = sum(
                1 for r in results if r["pso"]["criterion"] >= r[alg]["criterion"] - 1e-6
            )
            print(f"pso criterion >= {alg} - 1e-6: {ok}/{len(results)}")
    if "multiplicative" in algorithms and "fedorov_wynn" in algorithms:
        ok = sum(
            1
            for r in results
            if abs(r["multiplicative"]["criterion"] - r["fedorov_wynn"]["criterion"])
            <= 1e-3 * max(1.0, abs(r["multiplicative"]["criterion"]))
        )
        print(f"baseline agreement within 1e-3 relative: {ok}/{len(results)}")
    total = sum(r[alg]["seconds"] for r in results for alg in algorithms)
    print(f"total algorithm time: {total:.1f}s (informational only)", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _sweep_space_model() -> tuple[FactorSpace, ModelSpec]:
    space = FactorSpace((Factor.discrete("x1", (-1, 1)), Factor.continuous("x2", -1, 1)))
    model = ModelSpec(intercept=True, main_effects=(0, 1), link="logit")
    return space, model


def _sweep_cell(task: tuple) -> tuple[float, float, float]:
    mode, b0, b1, b2, base_seed, index, true_link = task
    space, model = _sweep_space_model()
    beta = np.array([b0, b1, b2])
    config = PsoConfig(
        n_particles=25, max_iter=100, max_resets=200, converge_tol=1e-4,
        eff_bound=0.99, seed=_cell_seed(base_seed, index, 1), check_resolution=41,
    )
    result = run_pso(model, space, beta, config)
    if mode == "minimal_support":
        value = float(minimal_support_classify(result.design, model.k))
    else:
        config_true = dataclasses.replace(config, seed=_cell_seed(base_seed, index, 2))
        value = efficiency_under_link(
            result.design, model, true_link, space, beta, config_true
        )
    return b1, b2, value


def _grid_1d(lo: float, hi: float, step: float) -> list[float]:
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 10) for i in range(n + 1)]


def cmd_sweep(args) -> int:
    if args.mode == "misspec" and args.true_link is None:
        raise ConfigError("--true-link is required for misspec sweeps")
    b1_grid = _grid_1d(-1.5, 1.5, args.resolution)
    b2_grid = _grid_1d(-3.0, 3.0, args.resolution)
    cells = [(b1, b2) for b1 in b1_grid for b2 in b2_grid]

    done: dict[tuple[str, str], float] = {}
    out = Path(args.out)
    if out.exists():
        with open(out, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                done[(row["beta1"], row["beta2"])] = float(row["value"])

    def key(b1: float, b2: float) -> tuple[str, str]:
        return (f"{b1:.6f}", f"{b2:.6f}")

    tasks = []
    for index, (b1, b2) in enumerate(cells):
        if key(b1, b2) not in done:
            tasks.append((args.mode, args.beta0, b1, b2, args.seed, index, args.true_link))
    workers = _workers()
    if tasks:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                computed = list(pool.map(_sweep_cell, tasks))
        else:
            computed = []
            for t in tasks:
                b1, b2, value = _sweep_cell(t)
                computed.append((b1, b2, value))
                _write_sweep(out, done | {key(b1, b2): value for b1, b2, value in computed}, cells, key)
        for b1, b2, value in computed:
            done[key(b1, b2)] = value
    _write_sweep(out, done, cells, key)
    print(f"sweep {args.mode}: {len(cells)} cells -> {out}")
    values = np.array([done[key(b1, b2)] for b1, b2 in cells])
    print(f"value min/median/max: {values.min():.4f} / {np.median(values):.4f} / {values.max():.4f}")
    return EXIT_OK


def _write_sweep(out: Path, done: dict, cells: list, key) -> None:
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beta1", "beta2", "value"])
        for b1, b2 in cells:
            k = key(b1, b2)
            if k in done:
                writer.writerow([k[0], k[1], repr(done[k])])


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psodesign",
        description="Locally D-optimal designs for binary-response GLMs via particle swarm optimization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_pso_flags(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--particles", type=int, default=None)
        p.add_argument("--max-iter", type=int, default=None, dest="max_iter")
        p.add_argument("--max-resets", type=int, default=None, dest="max_resets")
        p.add_argument("--eff-bound", type=float, default=None, dest="eff_bound")
        p.add_argument("--resolution", type=int, default=None)
        p.add_argument("--candidate-points", type=int, default=None, dest="candidate_points")

    p = sub.add_parser("find", help="search for a D-optimal design")
    p.add_argument("problem")
    add_pso_flags(p)
    p.add_argument("--out", default=None, help="prefix for .json/.csv design export")
    p.set_defaults(func=cmd_find)

    p = sub.add_parser("verify", help="equivalence-theorem check of a design file")
    p.add_argument("problem")
    p.add_argument("design")
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--eff-bound", type=float, default=None, dest="eff_bound")
    p.add_argument("--out", default=None, help="CSV path for the sensitivity profile")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("efficiency", help="D-efficiency of a design against a reference")
    p.add_argument("problem")
    p.add_argument("design")
    p.add_argument("reference")
    p.set_defaults(func=cmd_efficiency)

    p = sub.add_parser("benchmark", help="random-problem comparison of algorithms")
    p.add_argument("--family", choices=_FAMILIES, required=True)
    p.add_argument("--n-problems", type=int, default=100, dest="n_problems")
    p.add_argument("--algorithms", default="pso,multiplicative,fedorov_wynn")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resolution", type=int, default=21,
                   help="grid points per continuous factor for the baselines")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("sweep", help="per-cell study over a (beta1, beta2) grid")
    p.add_argument("--mode", choices=("misspec", "minimal_support"), required=True)
    p.add_argument("--beta0", type=float, default=1.0)
    p.add_argument("--resolution", type=float, default=0.5)
    p.add_argument("--true-link", choices=("probit", "loglog", "cloglog"), default=None,
                   dest="true_link")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularDesignError, PsoDesignError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
