"""Design-table files: JSON for lossless round-trips, CSV for plotting."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .design import Design
from .errors import ConfigError
from .problems import resolve_input


def design_to_dict(design: Design, factor_names: list[str], description: str = "") -> dict:
    d = {
        "factors": list(factor_names),
        "settings": [[float(v) for v in row] for row in design.settings],
        "weights": [float(w) for w in design.weights],
    }
    if description:
        d["description"] = description
    return d


def design_from_dict(raw: dict) -> tuple[Design, list[str]]:
    if not isinstance(raw, dict):
        raise ConfigError("design file must contain a JSON object")
    unknown = sorted(set(raw) - {"factors", "settings", "weights", "description"})
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in design file")
    for key in ("settings", "weights"):
        if key not in raw:
            raise ConfigError(f"design file missing {key!r}")
    design = Design(np.asarray(raw["settings"], dtype=float), np.asarray(raw["weights"], dtype=float))
    names = [str(n) for n in raw.get("factors", [])]
    if names and len(names) != design.n_factors:
        raise ConfigError("design file factor names do not match the settings width")
    return design, names


def save_design_json(path: str | Path, design: Design, factor_names: list[str], description: str = "") -> None:
    payload = design_to_dict(design, factor_names, description)
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def save_design_csv(path: str | Path, design: Design, factor_names: list[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(factor_names) + ["weight"])
        for row, w in zip(design.settings, design.weights):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(w))])


def load_design(path_or_name: str) -> tuple[Design, list[str]]:
    """Load a design table (JSON; bundled reference names also accepted)."""
    path = resolve_input(path_or_name)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    return design_from_dict(raw)
