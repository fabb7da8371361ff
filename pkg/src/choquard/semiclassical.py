"""Rescaled singularly perturbed problems and their concentration as eps -> 0.

In the rescaled variable the ground state of the eps-problem solves

    (SCC1)  -lap u + u          = (|x|^-mu * Q(eps .) G(u)) Q(eps x) g(u) / p
    (SCC2)  -lap u + V(eps x) u = (|x|^-mu * G(u)) g(u) / p

so both fit the weighted functional with kappa(r) = 1, w(r) = Q(eps r) or
kappa(r) = V(eps r), w(r) = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict, field

import numpy as np

from .errors import DomainError, PreconditionError
from .functional import Functional, ProblemParams
from .grid import h1_norm_sq
from .solver import SolverConfig, minimize_on_nehari, parallel_map

KINDS = ("gaussian_well", "gaussian_bump", "constant")


@dataclass(frozen=True)
class Potential:
    kind: str = "gaussian_well"
    base: float = 1.0
    amplitude: float = 1.0
    width: float = 2.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"potential kind must be one of {KINDS}, got {self.kind!r}")
        for k in ("base", "amplitude", "width"):
            v = getattr(self, k)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise DomainError(f"{k} must be a finite real")
            object.__setattr__(self, k, float(v))
        if self.base <= 0:
            raise DomainError("base must be positive")
        if self.width <= 0:
            raise DomainError("width must be positive")
        if self.kind != "constant" and self.amplitude <= 0:
            raise DomainError("amplitude must be positive")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "gaussian_well":
            return self.base + self.amplitude * (1.0 - np.exp(-(r / self.width) ** 2))
        if self.kind == "gaussian_bump":
            return self.base + self.amplitude * np.exp(-(r / self.width) ** 2)
        return np.full_like(r, self.base)

    @property
    def value_at_origin(self):
        return float(self(0.0))

    @property
    def value_at_infinity(self):
        if self.kind == "gaussian_well":
            return self.base + self.amplitude
        return self.base

    @property
    def minimum(self):
        return self.base

    @property
    def maximum(self):
        return self.base + (self.amplitude if self.kind != "constant" else 0.0)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        extra = set(d) - {"kind", "base", "amplitude", "width"}
        if extra:
            raise DomainError(f"unknown potential keys: {sorted(extra)}")
        return cls(**d)


def _check_eps(eps):
    eps = float(eps)
    if not eps > 0:
        raise DomainError("eps must be positive")
    return eps


def scc1_functional(eps, Q, params, kernel, d=None):
    if Q.kind not in ("gaussian_bump", "constant"):
        raise PreconditionError("SCC1 expects a gaussian_bump or constant Q")
    eps = _check_eps(eps)
    if d is None:
        weight = lambda r: Q(eps * r)
    else:
        weight = lambda r: np.minimum(d, Q(eps * r))
    return Functional(params.replace(kappa=1.0), kernel, weight=weight)


def scc2_functional(eps, V, params, kernel):
    if V.kind not in ("gaussian_well", "constant"):
        raise PreconditionError("SCC2 expects a gaussian_well or constant V")
    eps = _check_eps(eps)
    return Functional(params, kernel, kappa=V(eps * kernel.grid.nodes))


def _init(kernel, init):
    if init is None:
        return kernel.grid.sample(lambda r: np.exp(-r * r / 2))
    return init


def solve_scc1(eps, Q, params, kernel, config=SolverConfig(), init=None):
    """Ground state of the Q-weighted problem (kappa = 1)."""
    return minimize_on_nehari(scc1_functional(eps, Q, params, kernel), _init(kernel, init), config)


def solve_scc2(eps, V, params, kernel, config=SolverConfig(), init=None):
    """Ground state with the linear potential V(eps x)."""
    return minimize_on_nehari(scc2_functional(eps, V, params, kernel), _init(kernel, init), config)


def truncated_level(eps, Q, d, params, kernel, config=SolverConfig(), init=None):
    """Level of the problem with weight min(d, Q(eps x))."""
    lo, hi = Q.minimum, Q.maximum
    if not lo - 1e-12 <= d <= hi + 1e-12:
        raise PreconditionError(f"d must lie in [{lo}, {hi}]")
    fn = scc1_functional(eps, Q, params, kernel, d=d)
    return minimize_on_nehari(fn, _init(kernel, init), config).energy


@dataclass
class SweepRow:
    eps: float
    energy: float
    max_point: float
    decay_beta: float
    limit_gap: float
    converged: bool

    def to_dict(self):
        return asdict(self)


@dataclass
class SweepResult:
    problem: str
    rows: list
    reference_level: float          # the eps -> 0 limit level
    upper_level: float              # level at the value of the potential at infinity
    h1_distances: list = field(default_factory=list)
    reports: list = field(default_factory=list, repr=False)


_reference_cache = {}


def reference_levels(problem, potential, params, kernel, config=SolverConfig(), init=None):
    """(limit level, level at infinity) from autonomous solves, cached per sweep setup."""
    key = (problem, potential, params, kernel.grid, kernel.mu, config)
    if key in _reference_cache:
        return _reference_cache[key]
    if problem == "scc1":
        top, bottom = potential.maximum, potential.value_at_infinity
        # combined-G convention: a constant weight c is nu = tau = c
        cases = [params.replace(kappa=1.0, nu=params.nu * top, tau=params.tau * top),
                 params.replace(kappa=1.0, nu=params.nu * bottom, tau=params.tau * bottom)]
    elif problem == "scc2":
        cases = [params.replace(kappa=potential.minimum),
                 params.replace(kappa=potential.value_at_infinity)]
    else:
        raise PreconditionError(f"unknown problem {problem!r}")
    reps = parallel_map(lambda p: minimize_on_nehari(Functional(p, kernel), _init(kernel, init), config), cases)
    out = (reps[0].energy, reps[1].energy)
    _reference_cache[key] = out
    return out


def concentration_sweep(problem, potential, eps_list, params, kernel, config=SolverConfig(), init=None):
    eps = [float(e) for e in eps_list]
    if len(eps) < 3 or any(b >= a for a, b in zip(eps, eps[1:])) or eps[-1] <= 0:
        raise PreconditionError("eps_list must hold >= 3 positive, strictly decreasing values")
    solve = {"scc1": solve_scc1, "scc2": solve_scc2}.get(problem)
    if solve is None:
        raise PreconditionError(f"problem must be scc1 or scc2, got {problem!r}")
    ref, upper = reference_levels(problem, potential, params, kernel, config, init)
    reports = parallel_map(lambda e: solve(e, potential, params, kernel, config, init), eps)
    rows = [SweepRow(e, r.energy, r.max_point, r.decay_rate, r.energy - ref, r.converged)
            for e, r in zip(eps, reports)]
    dist = [math.sqrt(h1_norm_sq(a.field - b.field, 1.0)) for a, b in zip(reports, reports[1:])]
    return SweepResult(problem, rows, ref, upper, dist, reports)


def decay_scaling(rows):
    """Log-log slope of the original-variable decay rate beta / eps against eps."""
    eps = np.array([r.eps for r in rows])
    rate = np.array([r.decay_beta for r in rows]) / eps
    ok = np.isfinite(rate) & (rate > 0)
    if ok.sum() < 2:
        return math.nan
    slope, _ = np.polyfit(np.log(eps[ok]), np.log(rate[ok]), 1)
    return float(slope)
