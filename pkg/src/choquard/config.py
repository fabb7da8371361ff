"""Run configuration: problem, grid, solver, optional potential and seed.

The canonical form is the JSON object returned by `RunConfig.to_dict`; every
missing section is filled with the defaults below.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .functional import ProblemParams
from .grid import DEFAULT_N, DEFAULT_R_MAX, make_grid
from .semiclassical import Potential
from .solver import SolverConfig

# stretch of the default grid; the ground states have a core of width ~1e-2
# at mu = 1, so the spacing is refined towards the origin
DEFAULT_STRETCH = 7.0

_SECTIONS = ("problem", "grid", "solver", "potential", "seed")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


@dataclass(frozen=True)
class GridSpec:
    r_max: float = DEFAULT_R_MAX
    n: int = DEFAULT_N
    stretch: float = DEFAULT_STRETCH

    def __post_init__(self):
        # reuse the grid constructor's validation without allocating
        try:
            make_grid(self.r_max, 16, self.stretch)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 16:
            raise ConfigError(f"grid.n must be an integer >= 16, got {self.n!r}")
        object.__setattr__(self, "r_max", float(self.r_max))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "stretch", float(self.stretch))

    def build(self):
        return make_grid(self.r_max, self.n, self.stretch)

    def to_dict(self):
        return {"r_max": self.r_max, "n": self.n, "stretch": self.stretch}


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemParams = field(default_factory=ProblemParams)
    grid: GridSpec = field(default_factory=GridSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    potential: Potential | None = None
    seed: int = 0

    def to_dict(self):
        return {
            "problem": self.problem.to_dict(),
            "grid": self.grid.to_dict(),
            "solver": self.solver.to_dict(),
            "potential": None if self.potential is None else self.potential.to_dict(),
            "seed": self.seed,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        extra = set(d) - set(_SECTIONS)
        if extra:
            raise ConfigError(f"unknown config sections: {sorted(extra)}")
        try:
            problem = ProblemParams.from_dict(_section(d, "problem"))
            grid = GridSpec(**_section(d, "grid"))
            solver = SolverConfig.from_dict(_section(d, "solver"))
            pot = d.get("potential")
            potential = None if pot is None else Potential.from_dict(_section(d, "potential"))
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        seed = d.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
        return cls(problem, grid, solver, potential, seed)

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        return cls.from_dict(d)


def _section(d, key):
    sec = d.get(key) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section {key!r} must be an object")
    return sec


def load_config(path=None):
    """Read a config file; None gives the defaults."""
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return RunConfig.from_json(text)


def default_config():
    return RunConfig()
