"""The energy functional, its gradient and the Nehari/Pohozaev diagnostics.

    Phi(u) = 1/2 int |grad u|^2 + kappa u^2
             - 1/(2p) int int w G(u)(x) w G(u)(y) / |x - y|^mu,     p = 6 - mu

with G(s) = nu |s|^p + tau s_+^zeta / zeta. The weight w(r) and a radial
kappa(r) are only used by the rescaled semiclassical problems; the autonomous
problem has w = 1 and constant kappa.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict, field

import numpy as np

from .errors import DomainError, GridMismatchError
from .grid import Field, check_same_grid, stiffness_apply

_PARAM_KEYS = ("mu", "kappa", "nu", "tau", "zeta")


@dataclass(frozen=True)
class ProblemParams:
    mu: float = 1.0
    kappa: float = 1.0
    nu: float = 1.0
    tau: float = 1.0
    zeta: float | None = None   # defaults to the midpoint 5.5 - mu

    def __post_init__(self):
        for k in ("mu", "kappa", "nu", "tau"):
            v = getattr(self, k)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise DomainError(f"{k} must be a finite real, got {v!r}")
            object.__setattr__(self, k, float(v))
        if not 0.0 < self.mu < 3.0:
            raise DomainError(f"mu must lie in (0, 3), got {self.mu}")
        # kappa = 0 is the limit (pure critical) problem used with the bubbles
        if self.kappa < 0:
            raise DomainError("kappa must be nonnegative")
        if self.nu <= 0:
            raise DomainError("nu must be positive")
        if self.tau < 0:
            raise DomainError("tau must be nonnegative")
        z = 5.5 - self.mu if self.zeta is None else self.zeta
        if isinstance(z, bool) or not isinstance(z, (int, float)):
            raise DomainError(f"zeta must be real, got {z!r}")
        z = float(z)
        if not (5.0 - self.mu < z < 6.0 - self.mu):
            raise DomainError(f"zeta must lie in ({5 - self.mu}, {6 - self.mu}), got {z}")
        object.__setattr__(self, "zeta", z)

    @property
    def p(self):
        return 6.0 - self.mu

    @property
    def alpha(self):
        """Ambrosetti-Rabinowitz exponent."""
        return min(2.0 * self.zeta, 2.0 * self.p)

    def replace(self, **kw):
        d = self.to_dict()
        d.update(kw)
        return ProblemParams(**d)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        extra = set(d) - set(_PARAM_KEYS)
        if extra:
            raise DomainError(f"unknown problem keys: {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    mass: float
    nonlocal_: float    # trailing underscore: `nonlocal` is a keyword
    total: float
    nehari_residual: float
    pohozaev_residual: float

    def to_dict(self):
        d = asdict(self)
        d["nonlocal"] = d.pop("nonlocal_")
        return d


def G_values(params, u):
    u = np.asarray(u, dtype=float)
    up = np.maximum(u, 0.0)
    return params.nu * np.abs(u) ** params.p + params.tau * up ** params.zeta / params.zeta


def g_values(params, u):
    u = np.asarray(u, dtype=float)
    up = np.maximum(u, 0.0)
    p = params.p
    return p * params.nu * np.abs(u) ** (p - 2.0) * u + params.tau * up ** (params.zeta - 1.0)


def G_eval(params, u):
    return Field(u.grid, G_values(params, u.values))


def g_eval(params, u):
    return Field(u.grid, g_values(params, u.values))


@dataclass
class State:
    """Everything about u that costs a kernel product, reusable along the ray."""
    u: np.ndarray
    ug: np.ndarray      # interpolant at the cell Gauss points
    Su: np.ndarray
    P: np.ndarray       # cell average of w |u|^p
    F: np.ndarray       # cell average of w u_+^zeta / zeta
    KP: np.ndarray
    KF: np.ndarray
    kin: float
    mass2: float        # int kappa u^2
    B: float
    C: float
    E: float
    t: float = 1.0

    def scaled(self, t, p, zeta):
        tp, tz = t ** p, t ** zeta
        return State(t * self.u, t * self.ug, t * self.Su, tp * self.P, tz * self.F,
                     tp * self.KP, tz * self.KF, t * t * self.kin, t * t * self.mass2,
                     tp * tp * self.B, tp * tz * self.C, tz * tz * self.E, t * self.t)


@dataclass(frozen=True)
class Ray:
    """Phi(t u) and Psi(t u) as explicit sums of powers of t."""
    q2: float
    B: float
    C: float
    E: float
    p: float
    zeta: float
    nu: float
    tau: float

    def phi(self, t):
        p, z, nu, tau = self.p, self.zeta, self.nu, self.tau
        nl = nu * nu * t ** (2 * p) * self.B + 2 * nu * tau * t ** (p + z) * self.C + tau * tau * t ** (2 * z) * self.E
        return 0.5 * t * t * self.q2 - nl / (2 * p)

    def psi_over_t2(self, t):
        p, z, nu, tau = self.p, self.zeta, self.nu, self.tau
        return (self.q2 - nu * nu * self.B * t ** (2 * p - 2)
                - nu * tau * (p + z) / p * self.C * t ** (p + z - 2)
                - tau * tau * z / p * self.E * t ** (2 * z - 2))

    def psi(self, t):
        return t * t * self.psi_over_t2(t)


class Functional:
    """Phi on a fixed grid and kernel, optionally with radial kappa and weight fields."""

    def __init__(self, params, kernel, kappa=None, weight=None):
        if abs(kernel.mu - params.mu) > 0.0:
            raise DomainError(f"kernel mu={kernel.mu} differs from params mu={params.mu}")
        self.params = params
        self.kernel = kernel
        self.grid = kernel.grid
        n = self.grid.n
        self.cells = self.grid.cells
        self.kappa = np.full(n, params.kappa) if kappa is None else _field_array(kappa, self.grid)
        if weight is None:
            self.weight = None
        elif callable(weight):
            pts = self.cells.points
            self.weight = np.broadcast_to(np.asarray(weight(pts), dtype=float), pts.shape).copy()
        else:
            self.weight = self.cells.interpolate_linear(_field_array(weight, self.grid))

    # -- core evaluation -------------------------------------------------

    def _values(self, u):
        if isinstance(u, Field):
            check_same_grid(u.grid, self.grid)
            return u.values
        u = np.asarray(u, dtype=float)
        if u.shape != (self.grid.n,):
            raise GridMismatchError("array length does not match the grid")
        return u

    def state(self, u):
        pr = self.params
        u = np.array(self._values(u), dtype=float)
        m = self.grid.mass
        cq = self.cells
        ug = cq.interpolate(u)
        dens = np.abs(ug) ** pr.p
        if self.weight is not None:
            dens = dens * self.weight
        P = cq.average(dens)
        if pr.tau > 0:
            dens = np.maximum(ug, 0.0) ** pr.zeta / pr.zeta
            if self.weight is not None:
                dens = dens * self.weight
            F = cq.average(dens)
            KPF = self.kernel.matrix @ np.stack([P, F], axis=1)
            KP, KF = KPF[:, 0].copy(), KPF[:, 1].copy()
            C = 0.5 * float(np.sum(m * P * KF) + np.sum(m * F * KP))
            E = float(np.sum(m * F * KF))
        else:
            F = np.zeros_like(u)
            KP = self.kernel.matrix @ P
            KF = np.zeros_like(u)
            C = E = 0.0
        Su = stiffness_apply(self.grid, u)
        return State(u, ug, Su, P, F, KP, KF,
                     kin=float(np.sum(u * Su)),
                     mass2=float(np.sum(m * self.kappa * u * u)),
                     B=float(np.sum(m * P * KP)), C=C, E=E)

    def scaled(self, s, t):
        return s.scaled(t, self.params.p, self.params.zeta)

    def ray(self, s):
        pr = self.params
        return Ray(s.kin + s.mass2, s.B, s.C, s.E, pr.p, pr.zeta, pr.nu, pr.tau)

    def nonlocal_energy(self, s):
        pr = self.params
        return (pr.nu ** 2 * s.B + 2 * pr.nu * pr.tau * s.C + pr.tau ** 2 * s.E) / (2 * pr.p)

    def phi(self, s):
        return 0.5 * (s.kin + s.mass2) - self.nonlocal_energy(s)

    def psi(self, s):
        return self.ray(s).psi(1.0)

    def pohozaev(self, s):
        return 0.5 * s.kin + 1.5 * s.mass2 - 0.5 * self.params.nu ** 2 * s.B

    def euclid_gradient(self, s):
        """d Phi / d u_i (gradient w.r.t. the nodal values)."""
        pr = self.params
        m = self.grid.mass
        cq = self.cells
        wg = g_values(pr, s.ug)
        if self.weight is not None:
            wg = wg * self.weight
        KwG = cq.spread(pr.nu * s.KP + pr.tau * s.KF)
        return s.Su + m * self.kappa * s.u - cq.gather(wg * KwG) / pr.p

    def l2_gradient(self, s):
        return self.euclid_gradient(s) / self.grid.mass

    def breakdown(self, s):
        kin = 0.5 * s.kin
        mass = 0.5 * s.mass2
        nl = self.nonlocal_energy(s)
        return EnergyBreakdown(kin, mass, nl, kin + mass - nl, self.psi(s), self.pohozaev(s))

    # -- Field level API ---------------------------------------------------

    def energy(self, u):
        return self.breakdown(self.state(u))

    def gradient(self, u):
        return Field(self.grid, self.l2_gradient(self.state(u)))

    def nehari_residual(self, u):
        return self.psi(self.state(u))


def _field_array(f, grid):
    if isinstance(f, Field):
        check_same_grid(f.grid, grid)
        return np.array(f.values)
    if callable(f):
        return np.asarray(f(grid.nodes), dtype=float)
    a = np.asarray(f, dtype=float)
    if a.ndim == 0:
        return np.full(grid.n, float(a))
    if a.shape != (grid.n,):
        raise GridMismatchError("coefficient field does not match the grid")
    return a


def energy(params, kernel, u):
    return Functional(params, kernel).energy(u)


def energy_gradient(params, kernel, u):
    return Functional(params, kernel).gradient(u)


def nehari_residual(params, kernel, u):
    return Functional(params, kernel).nehari_residual(u)
