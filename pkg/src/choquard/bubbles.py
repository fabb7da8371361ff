"""Truncated Talenti bubbles u_eps = psi * U_eps and their asymptotics as eps -> 0."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import constants
from .errors import DomainError, FitError, PreconditionError
from .functional import Functional, ProblemParams
from .grid import Field, graded_grid, make_grid
from .riesz import build_kernel, double_energy
from .solver import ray_max

POINTS_PER_EPS = 10     # resolution guard: eps / h >= 10
DOMAIN_FACTOR = 2.2     # grid radius in units of delta (support is [0, 2 delta])
MAX_NODES = 4000        # beyond this the grid is graded towards the core instead


def cutoff(r, delta):
    """1 on [0, delta], 0 beyond 2 delta, quintic smoothstep in between."""
    x = np.clip((np.asarray(r, dtype=float) - delta) / delta, 0.0, 1.0)
    # clamp: the polynomial rounds to about -1e-16 just below x = 1
    return np.clip(1.0 - x ** 3 * (10.0 - 15.0 * x + 6.0 * x * x), 0.0, 1.0)


def cutoff_deriv(r, delta):
    x = np.clip((np.asarray(r, dtype=float) - delta) / delta, 0.0, 1.0)
    return -30.0 * x * x * (1.0 - x) ** 2 / delta


def bubble(r, eps, delta):
    r = np.asarray(r, dtype=float)
    return cutoff(r, delta) * constants.talenti(r / eps) / math.sqrt(eps)


def bubble_deriv(r, eps, delta):
    r = np.asarray(r, dtype=float)
    U = constants.talenti(r / eps) / math.sqrt(eps)
    dU = constants.talenti_deriv(r / eps) / eps ** 1.5
    return cutoff_deriv(r, delta) * U + cutoff(r, delta) * dU


@dataclass(frozen=True)
class BubbleSpec:
    eps: float
    delta: float
    grid: object

    def __post_init__(self):
        if not self.eps > 0:
            raise DomainError("eps must be positive")
        if not 0 < self.delta < self.grid.r_max / 2:
            raise DomainError("need 0 < delta < r_max / 2 so the support fits")


def bubble_field(spec):
    return Field(spec.grid, bubble(spec.grid.nodes, spec.eps, spec.delta))


def bubble_grid(eps, delta, points_per_eps=POINTS_PER_EPS, domain_factor=DOMAIN_FACTOR,
                max_nodes=MAX_NODES):
    """Grid covering the support with spacing <= eps / points_per_eps at the core.

    Uniform when that needs at most max_nodes nodes, otherwise graded.
    """
    R = domain_factor * delta
    h0 = eps / points_per_eps
    n = max(16, int(math.ceil(R / h0)) - 1)
    if n <= max_nodes:
        return make_grid(R, n)
    return graded_grid(R, max_nodes, h0)


@dataclass
class AsymptoticFit:
    exponent_target: float
    exponent_fitted: float
    r_squared: float
    eps_samples: list
    integrals: list = field(default_factory=list)
    remainders: list = field(default_factory=list)
    constant: float = math.nan
    tolerance: float = math.nan
    r_squared_tail: float = math.nan      # over the final three samples
    minimum: float | None = None          # one-sided check: fitted >= minimum

    @property
    def passed(self):
        if self.r_squared < 0.98:
            return False
        if self.minimum is not None:
            return self.exponent_fitted >= self.minimum
        return abs(self.exponent_fitted - self.exponent_target) <= self.tolerance

    def rows(self):
        return [dict(eps=e, integral=i, remainder=r, target_order=self.exponent_target,
                     fitted_order=self.exponent_fitted)
                for e, i, r in zip(self.eps_samples, self.integrals, self.remainders)]


def loglog_fit(eps, vals):
    x = np.log(np.asarray(eps, dtype=float))
    y = np.log(np.asarray(vals, dtype=float))
    slope, icpt = np.polyfit(x, y, 1)
    res = y - (slope * x + icpt)
    tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(res ** 2)) / tot if tot > 0 else 0.0
    return float(slope), r2


def _check_eps(eps_list, minimum=3):
    eps = [float(e) for e in eps_list]
    if len(eps) < minimum:
        raise PreconditionError(f"need at least {minimum} eps values")
    if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise PreconditionError("eps values must be positive and strictly decreasing")
    return eps


def _fit(target, tol, eps, integrals, rem, const, minimum=None):
    rem = np.asarray(rem, dtype=float)
    if np.any(rem <= 0):
        raise FitError(f"non-positive remainder {rem.tolist()}: quadrature dominated")
    slope, r2 = loglog_fit(eps, rem)
    tail = loglog_fit(eps[-3:], rem[-3:])[1] if len(eps) >= 3 else math.nan
    return AsymptoticFit(target, slope, r2, list(eps), list(map(float, integrals)),
                         rem.tolist(), const, tol, tail, minimum)


def _radial(f, a, b, breaks=()):
    pts = sorted({a, b, *[p for p in breaks if a < p < b]})
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-13, limit=400)
        total += val
    return total


def bubble_integrals(eps, delta):
    """(int |grad u_eps|^2, int u_eps^2, int u_eps^6) by adaptive 1-D quadrature."""
    br = [eps, 10 * eps, 100 * eps, delta]
    four_pi = 4.0 * math.pi
    grad = _radial(lambda r: four_pi * r * r * bubble_deriv(r, eps, delta) ** 2, 0.0, 2 * delta, br)
    mass = _radial(lambda r: four_pi * r * r * bubble(r, eps, delta) ** 2, 0.0, 2 * delta, br)
    crit = _radial(lambda r: four_pi * r * r * bubble(r, eps, delta) ** 6, 0.0, 2 * delta, br)
    return grad, mass, crit


def bubble_constant(mu=1.0):
    """C(3,mu)^{3/(2(6-mu))} S_HL^{3/2}; equals S^{3/2} identically."""
    return constants.hls_constant(mu) ** (3.0 / (2.0 * (6.0 - mu))) * constants.shl_constant(mu) ** 1.5


def verify_gradient_estimate(delta, eps_list, mu=1.0, quantity="gradient"):
    """Fit the eps-order of the bubble's gradient, mass or critical-norm remainder.

    gradient: int |grad u_eps|^2 - K    (order 1)
    mass:     int u_eps^2                (order 1)
    critical: K - int u_eps^6            (order 3)
    with K = C(3,mu)^{3/(2(6-mu))} S_HL^{3/2}.
    """
    eps = _check_eps(eps_list, 4)
    K = bubble_constant(mu)
    vals, rem = [], []
    for e in eps:
        g, m, c = bubble_integrals(e, delta)
        if quantity == "gradient":
            vals.append(g)
            rem.append(g - K)
        elif quantity == "mass":
            vals.append(m)
            rem.append(m)
        elif quantity == "critical":
            vals.append(c)
            rem.append(K - c)
        else:
            raise ValueError(f"unknown quantity {quantity!r}")
    if quantity == "critical":
        return _fit(3.0, math.inf, eps, vals, rem, K, minimum=2.5)
    if quantity == "gradient":
        return _fit(1.0, 0.2, eps, vals, rem, K, minimum=0.8)
    return _fit(1.0, 0.2, eps, vals, rem, K)


def verify_convolution_estimates(delta, mu, q, eps_list, points_per_eps=POINTS_PER_EPS):
    """Order in eps of D(eps) = int int u_eps^q u_eps^q / |x - y|^mu.

    For q < 6 - mu the leading term is c eps^{6-mu-q}. For q = 6 - mu, D tends
    to K = C(3,mu)^{3/2} S_HL^{(6-mu)/2}, the HLS energy of the untruncated
    bubble, and the fitted quantity is the deficit K - D(eps). It is computed
    as the double energy of (U_eps^p - u_eps^p, U_eps^p + u_eps^p), which equals
    K - D exactly on R^3 and avoids cancelling two nearly equal numbers.
    """
    p = 6.0 - mu
    if not (p / 2 < q <= p):
        raise PreconditionError(f"q must lie in ({p / 2}, {p}], got {q}")
    eps = _check_eps(eps_list, 3)
    critical = math.isclose(q, p, rel_tol=0, abs_tol=1e-12)
    K = constants.hls_constant(mu) ** 1.5 * constants.shl_constant(mu) ** (p / 2) if critical else math.nan
    vals, rem = [], []
    for e in eps:
        g = bubble_grid(e, delta, points_per_eps)
        ker = build_kernel(g, mu)
        u = bubble(g.nodes, e, delta)
        if critical:
            U = constants.talenti(g.nodes / e) / math.sqrt(e)
            deficit = double_energy(ker, U ** p - u ** p, U ** p + u ** p)
            vals.append(K - deficit)
            rem.append(deficit)
        else:
            d = double_energy(ker, u ** q, u ** q)
            vals.append(d)
            rem.append(d)
        del ker
    if critical:
        return _fit(p / 2, 0.5, eps, vals, rem, K)
    # D itself grows like eps^{-(q-(6-mu))} = eps^{6-mu-q}
    return _fit(p - q, 0.1, eps, vals, rem, math.nan)


@dataclass(frozen=True)
class LevelRow:
    eps: float
    level: float
    critical_level: float

    @property
    def margin(self):
        return self.critical_level - self.level


@dataclass
class LevelBound:
    rows: list
    tau_zero_rows: list

    @property
    def below(self):
        return all(r.margin > 0 for r in self.rows)

    @property
    def margin_increasing(self):
        m = [r.margin for r in self.rows]
        return all(b > a for a, b in zip(m, m[1:]))

    @property
    def control_vanishing(self):
        m = [abs(r.margin) for r in self.tau_zero_rows]
        return all(b < a for a, b in zip(m, m[1:]))

    @property
    def passed(self):
        return self.below and self.margin_increasing and self.control_vanishing


def verify_level_bound(params, delta, eps_list, points_per_eps=POINTS_PER_EPS, control=True):
    """max_t Phi(t u_eps) against the critical level, with an optional tau = 0 control."""
    if not (5.0 - params.mu < params.zeta < 6.0 - params.mu):
        raise PreconditionError("need 5 - mu < zeta < 6 - mu")
    eps = _check_eps(eps_list, 1)
    crit = constants.critical_level(params.mu)
    rows, ctrl = [], []
    p0 = params.replace(tau=0.0)
    for e in eps:
        g = bubble_grid(e, delta, points_per_eps)
        ker = build_kernel(g, params.mu)
        u = Field(g, bubble(g.nodes, e, delta))
        rows.append(LevelRow(e, ray_max(params, ker, u).level, crit))
        if control:
            ctrl.append(LevelRow(e, ray_max(p0, ker, u).level, crit))
        del ker
    return LevelBound(rows, ctrl)


def delta_trend(eps, deltas=(2.5, 5.0, 10.0)):
    """int |grad u_eps|^2 for several cutoff radii at fixed eps."""
    return [bubble_integrals(eps, d)[0] for d in deltas]
