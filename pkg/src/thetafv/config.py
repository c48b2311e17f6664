"""Run configuration: a flat JSON document with dotted keys.

Example::

    {
      "problem.name": "diffusion",
      "problem.nu": 0.01,
      "grid.n_cells": 180,
      "scheme.matrix_level": "tridiagonal",
      "controller.mode": "ramp",
      "controller.cap": 1e8,
      "run.max_iterations": 1000
    }

Missing keys take the defaults below; the grid defaults depend on the
problem.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .driver import RunOptions
from .mesh import Grid, build_grid
from .problems import DiffusionProblem, FreeFallProblem, WaveProblem
from .problems.base import Problem
from .scheme import SchemeConfig
from .stepping import CflController, Tolerances


class ConfigError(ValueError):
    """The configuration is unreadable or invalid."""


PROBLEMS: dict[str, type] = {
    "diffusion": DiffusionProblem,
    "wave": WaveProblem,
    "freefall": FreeFallProblem,
}

GRID_DEFAULTS: dict[str, dict[str, Any]] = {
    "diffusion": {"geometry": "spherical", "r_in": 1000.0, "r_out": 1003.0, "n_cells": 180, "stretch": 1.0},
    "wave": {"geometry": "spherical", "r_in": 100.0, "r_out": 104.0, "n_cells": 200, "stretch": 1.0},
    "freefall": {"geometry": "spherical", "r_in": 1.0, "r_out": 100.0, "n_cells": 200, "stretch": 1.024},
}

RUN_KEYS = ("max_iterations", "t_end", "max_retries")
TOLERANCE_KEYS = tuple(f.name for f in dataclasses.fields(Tolerances))
OUTPUT_DEFAULTS = {"dir": ".", "history": "history.csv", "profile": "profile.csv"}


def _field_names(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls) if f.init}


@dataclass
class RunConfig:
    """Everything needed to reproduce one run."""

    problem: str = "diffusion"
    problem_params: dict[str, Any] = field(default_factory=dict)
    grid: dict[str, Any] = field(default_factory=dict)
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    controller: CflController = field(default_factory=CflController)
    options: RunOptions = field(default_factory=RunOptions)
    output: dict[str, str] = field(default_factory=lambda: dict(OUTPUT_DEFAULTS))
    # reserved for test fixtures; the solvers are deterministic
    seed: int = 0
    source: dict[str, Any] = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, flat: dict[str, Any]) -> RunConfig:
        try:
            return _parse(flat)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def build_problem(self) -> Problem:
        return PROBLEMS[self.problem](**self.problem_params)

    def build_grid(self) -> Grid:
        return build_grid(**self.grid)

    @property
    def output_dir(self) -> Path:
        return Path(self.output["dir"])

    @property
    def history_path(self) -> Path:
        return self.output_dir / self.output["history"]

    @property
    def profile_path(self) -> Path:
        return self.output_dir / self.output["profile"]


def _parse(flat: dict[str, Any]) -> RunConfig:
    if not isinstance(flat, dict):
        raise ConfigError("configuration must be a JSON object")
    name = flat.get("problem.name", "diffusion")
    if name not in PROBLEMS:
        raise ConfigError(f"unknown problem {name!r}; expected one of {sorted(PROBLEMS)}")

    sections: dict[str, dict[str, Any]] = {s: {} for s in ("problem", "grid", "scheme", "controller", "run", "output")}
    seed = 0
    for key, value in flat.items():
        if key == "seed":
            seed = int(value)
            continue
        head, _, tail = key.partition(".")
        if head not in sections or not tail:
            raise ConfigError(f"unknown configuration key {key!r}")
        sections[head][tail] = value
    sections["problem"].pop("name", None)

    allowed = {
        "problem": _field_names(PROBLEMS[name]),
        "grid": set(GRID_DEFAULTS[name]),
        "scheme": _field_names(SchemeConfig),
        "controller": _field_names(CflController),
        "run": set(RUN_KEYS) | set(TOLERANCE_KEYS),
        "output": set(OUTPUT_DEFAULTS),
    }
    for section, values in sections.items():
        unknown = set(values) - allowed[section]
        if unknown:
            raise ConfigError(f"unknown keys in {section!r}: {', '.join(sorted(unknown))}")

    run = sections["run"]
    tolerances = Tolerances(**{k: run[k] for k in TOLERANCE_KEYS if k in run})
    t_end = run.get("t_end")
    if t_end is not None and not (math.isfinite(t_end) and t_end > 0.0):
        raise ConfigError("run.t_end must be a positive number")
    options = RunOptions(
        max_iterations=int(run.get("max_iterations", RunOptions.max_iterations)),
        tolerances=tolerances,
        t_end=t_end,
        max_retries=int(run.get("max_retries", RunOptions.max_retries)),
    )
    grid = {**GRID_DEFAULTS[name], **sections["grid"]}
    grid["n_cells"] = int(grid["n_cells"])

    config = RunConfig(
        problem=name,
        problem_params=sections["problem"],
        grid=grid,
        scheme=SchemeConfig(**sections["scheme"]),
        controller=CflController(**sections["controller"]),
        options=options,
        output={**OUTPUT_DEFAULTS, **sections["output"]},
        seed=seed,
        source=dict(flat),
    )
    # surface problem and grid errors at load time
    config.build_problem()
    config.build_grid()
    return config


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        flat = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(flat)


def with_override(flat: dict[str, Any], key: str, value: Any) -> RunConfig:
    """Parse ``flat`` with ``key`` replaced by ``value``."""
    if "." not in key and key != "seed":
        raise ConfigError(f"parameter {key!r} must be a dotted key such as 'controller.cfl'")
    return RunConfig.from_dict({**flat, key: value})
