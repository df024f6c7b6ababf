"""Problem-definition files: parsing, validation, and bundled presets.

A problem file is JSON describing the factor space, the linear predictor,
the nominal parameter values, and optional swarm-parameter overrides. Any
unknown key is rejected with the key named, so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .glm import LINKS, ModelSpec
from .pso import PsoConfig
from .space import Factor, FactorSpace, LinearConstraint, ensure_nonempty

_PSO_FIELDS = {f.name for f in dataclasses.fields(PsoConfig)}


@dataclass
class ProblemConfig:
    """A fully validated design problem."""

    name: str
    space: FactorSpace
    model: ModelSpec
    beta: np.ndarray
    pso: PsoConfig
    description: str = ""


def _reject_unknown(d: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in {where}")


def _parse_factor(d: dict, index: int) -> Factor:
    where = f"factors[{index}]"
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    _reject_unknown(d, {"name", "kind", "levels", "bounds"}, where)
    name = d.get("name")
    if not isinstance(name, str) or not name:
        raise ConfigError(f"{where} needs a nonempty 'name'")
    kind = d.get("kind")
    if kind == "discrete":
        if "levels" not in d or "bounds" in d:
            raise ConfigError(f"{where}: discrete factors take 'levels' only")
        return Factor.discrete(name, d["levels"])
    if kind == "continuous":
        if "bounds" not in d or "levels" in d:
            raise ConfigError(f"{where}: continuous factors take 'bounds' only")
        bounds = d["bounds"]
        if len(bounds) != 2:
            raise ConfigError(f"{where}: 'bounds' must be [lo, hi]")
        return Factor.continuous(name, bounds[0], bounds[1])
    raise ConfigError(f"{where}: 'kind' must be 'discrete' or 'continuous'")


def _parse_constraint(d: dict, index: int, n_factors: int) -> LinearConstraint:
    where = f"constraints[{index}]"
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    _reject_unknown(d, {"coeffs", "lo", "hi"}, where)
    coeffs = d.get("coeffs")
    if coeffs is None or len(coeffs) != n_factors:
        raise ConfigError(f"{where}: 'coeffs' must list one coefficient per factor")
    return LinearConstraint(
        coeffs=tuple(coeffs),
        lo=float(d.get("lo", float("-inf"))),
        hi=float(d.get("hi", float("inf"))),
    )


def _factor_index(ref, names: list[str], where: str) -> int:
    if isinstance(ref, str):
        if ref not in names:
            raise ConfigError(f"{where}: unknown factor name {ref!r}")
        return names.index(ref)
    if isinstance(ref, int) and not isinstance(ref, bool):
        if not 0 <= ref < len(names):
            raise ConfigError(f"{where}: factor index {ref} out of range")
        return ref
    raise ConfigError(f"{where}: factor references must be names or indices")


def _parse_model(d: dict, names: list[str]) -> ModelSpec:
    if not isinstance(d, dict):
        raise ConfigError("'model' must be an object")
    _reject_unknown(d, {"intercept", "main_effects", "interactions", "link"}, "model")
    link = d.get("link", "logit")
    if link not in LINKS:
        raise ConfigError(f"model.link must be one of {LINKS}, got {link!r}")
    mains = tuple(
        _factor_index(r, names, "model.main_effects") for r in d.get("main_effects", [])
    )
    inters = []
    for pair in d.get("interactions", []):
        if len(pair) != 2:
            raise ConfigError("model.interactions entries must be pairs")
        inters.append(
            (
                _factor_index(pair[0], names, "model.interactions"),
                _factor_index(pair[1], names, "model.interactions"),
            )
        )
    return ModelSpec(
        intercept=bool(d.get("intercept", True)),
        main_effects=mains,
        interactions=tuple(inters),
        link=link,
    )


def problem_from_dict(raw: dict, name: str = "problem") -> ProblemConfig:
    """Validate a parsed problem dictionary into a ProblemConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("problem file must contain a JSON object")
    _reject_unknown(
        raw,
        {"name", "description", "factors", "constraints", "model", "beta", "pso"},
        "problem",
    )
    factors_raw = raw.get("factors")
    if not factors_raw:
        raise ConfigError("problem needs a nonempty 'factors' list")
    factors = [_parse_factor(f, i) for i, f in enumerate(factors_raw)]
    constraints = [
        _parse_constraint(c, i, len(factors))
        for i, c in enumerate(raw.get("constraints", []))
    ]
    space = FactorSpace(tuple(factors), tuple(constraints))
    ensure_nonempty(space)

    if "model" not in raw:
        raise ConfigError("problem needs a 'model' section")
    model = _parse_model(raw["model"], space.names)
    model.validate_against(space.n_factors)

    beta = np.asarray(raw.get("beta", []), dtype=float).ravel()
    if beta.shape[0] != model.k:
        raise ConfigError(f"beta has length {beta.shape[0]}, model has k={model.k}")

    pso_raw = raw.get("pso", {})
    if not isinstance(pso_raw, dict):
        raise ConfigError("'pso' must be an object")
    _reject_unknown(pso_raw, _PSO_FIELDS, "pso")
    pso = PsoConfig(**pso_raw)

    return ProblemConfig(
        name=str(raw.get("name", name)),
        space=space,
        model=model,
        beta=beta,
        pso=pso,
        description=str(raw.get("description", "")),
    )


def _preset_root():
    return resources.files("psodesign") / "presets"


def preset_path(name: str) -> Path | None:
    """Path of a bundled problem or reference design, or None."""
    for candidate in (name, f"{name}.json"):
        for sub in ("", "designs"):
            p = _preset_root() / sub / candidate if sub else _preset_root() / candidate
            if p.is_file():
                return Path(str(p))
    return None


def list_presets() -> list[str]:
    return sorted(p.name for p in Path(str(_preset_root())).glob("*.json"))


def resolve_input(path_or_name: str) -> Path:
    """An existing file path, else a bundled preset of that name."""
    p = Path(path_or_name)
    if p.is_file():
        return p
    preset = preset_path(path_or_name)
    if preset is not None:
        return preset
    raise ConfigError(f"no such file or bundled preset: {path_or_name!r}")


def load_problem(path_or_name: str) -> ProblemConfig:
    """Load and validate a problem file (or bundled preset name)."""
    path = resolve_input(path_or_name)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    return problem_from_dict(raw, name=path.stem)
