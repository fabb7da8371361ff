"""Ground states by descent on the Nehari manifold.

Each iterate u >= 0 is scaled to the unique t(u) u with Psi = 0, which is also
the maximum of Phi along the ray. Minimizing J(u) = Phi(t(u) u) is then an
unconstrained problem whose gradient at a Nehari point is grad Phi itself.
Steps use the H^1 (Sobolev) gradient, i.e. the Euclidean gradient
preconditioned by the tridiagonal stiffness plus a mass shift.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict, field

import numpy as np
from scipy import linalg, optimize

from .errors import (DegenerateInitError, FitError, InsufficientTailError,
                     MonotonicityViolation, PreconditionError, ProjectionError)
from .functional import Functional, ProblemParams
from .grid import Field, stiffness_banded

DECAY_WINDOW = (1e-10, 1e-4)
MIN_TAIL_NODES = 20
LBFGS_MEMORY = 8
ENERGY_NOISE = 64 * np.finfo(float).eps


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 20000
    grad_tol: float = 1e-6      # relative to the H^1 norm of the projected init
    nehari_tol: float = 1e-10
    step_init: float = 1.0
    backtrack_factor: float = 0.5
    armijo_c: float = 1e-4

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")
        object.__setattr__(self, "max_iters", int(self.max_iters))
        for k in ("grad_tol", "nehari_tol", "step_init"):
            v = float(getattr(self, k))
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{k} must be positive")
            object.__setattr__(self, k, v)
        for k in ("backtrack_factor", "armijo_c"):
            v = float(getattr(self, k))
            if not 0 < v < 1:
                raise ValueError(f"{k} must lie in (0, 1)")
            object.__setattr__(self, k, v)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        extra = set(d) - set(cls.__dataclass_fields__)
        if extra:
            raise ValueError(f"unknown solver keys: {sorted(extra)}")
        return cls(**d)


@dataclass
class SolveReport:
    field: Field
    energy: float
    grad_norm: float
    nehari_residual: float
    pohozaev_residual: float
    iterations: int
    decay_rate: float
    max_point: float
    converged: bool
    grad_tol: float = math.nan          # absolute tolerance actually used
    energy_trace: list = field(default_factory=list, repr=False)

    def to_dict(self):
        keys = ("energy", "grad_norm", "nehari_residual", "pohozaev_residual",
                "iterations", "decay_rate", "max_point", "converged")
        out = {}
        for k in keys:
            v = getattr(self, k)
            if isinstance(v, float) and not math.isfinite(v):
                v = None
            out[k] = v
        return out


# -- ray projection -----------------------------------------------------

def _project_ray(ray, max_doublings=60):
    """Unique t > 0 with Psi(t u) = 0; psi(t)/t^2 is strictly decreasing."""
    f = ray.psi_over_t2
    if not ray.q2 > 0:
        raise ProjectionError("quadratic part vanishes: field is numerically zero")
    lo, hi = 1.0, 1.0
    k = 0
    if f(1.0) > 0:
        while f(hi) > 0:
            lo, hi = hi, 2.0 * hi
            k += 1
            if k > max_doublings:
                raise ProjectionError("no sign change: nonlinear part vanishes")
    else:
        while f(lo) <= 0:
            if f(lo) == 0:
                return lo
            hi, lo = lo, 0.5 * lo
            k += 1
            if k > max_doublings:
                raise ProjectionError("no sign change: nonlinear part dominates at all scales")
    if lo == hi:
        return lo
    return optimize.brentq(f, lo, hi, xtol=1e-300, rtol=1e-14, maxiter=200)


def _functional(params, kernel, functional):
    return functional if functional is not None else Functional(params, kernel)


def nehari_project(params, kernel, u, functional=None):
    fn = _functional(params, kernel, functional)
    if np.any(u.values < 0):
        raise PreconditionError("nehari_project expects u >= 0")
    s = fn.state(u)
    t = _project_ray(fn.ray(s))
    return t, Field(u.grid, t * u.values)


@dataclass(frozen=True)
class RayMax:
    t: float
    level: float
    golden_t: float
    golden_level: float

    def __iter__(self):
        return iter((self.t, self.level))


def ray_max(params, kernel, u, functional=None, rtol=1e-8):
    """max_t Phi(t u); the Nehari point is cross-checked by a golden-section search."""
    fn = _functional(params, kernel, functional)
    s = fn.state(u)
    ray = fn.ray(s)
    t = _project_ray(ray)
    level = fn.phi(fn.scaled(s, t))
    # independent scalar search: coarse log scan then golden section
    ts = np.logspace(-8, 8, 321)
    vals = np.array([ray.phi(x) for x in ts])
    k = int(np.clip(np.argmax(vals), 1, len(ts) - 2))
    res = optimize.minimize_scalar(lambda x: -ray.phi(x), bracket=(ts[k - 1], ts[k], ts[k + 1]),
                                   method="golden", options={"xtol": 1e-12})
    g_level = -float(res.fun)
    if abs(g_level - level) > rtol * max(abs(level), abs(g_level)):
        raise RuntimeError(f"ray maximum mismatch: Nehari {level!r} vs golden {g_level!r}")
    return RayMax(t, level, float(res.x), g_level)


# -- diagnostics ----------------------------------------------------------

def decay_fit(u, window=DECAY_WINDOW, min_nodes=MIN_TAIL_NODES):
    """Least squares ln u = ln C - beta r on nodes beyond the peak with u in window."""
    r = u.grid.nodes
    v = u.values
    i0 = int(np.argmax(v))
    mask = (v > window[0]) & (v < window[1]) & (np.arange(len(v)) > i0)
    if mask.sum() < min_nodes:
        raise InsufficientTailError(f"only {int(mask.sum())} nodes in the decay window {window}")
    x, y = r[mask], np.log(v[mask])
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    return -float(slope), r2


def decay_check(report, window=DECAY_WINDOW):
    beta, r2 = decay_fit(report.field, window)
    return beta, r2


def max_point(u):
    """Radius of the maximum with 3-point parabolic refinement (even extension at 0)."""
    r, v = u.grid.nodes, u.values
    i = int(np.argmax(v))
    if i == 0:
        # the parabola through u(-r_1) = u(r_1) peaks at the origin
        return 0.0
    if i == len(v) - 1:
        return float(r[i])
    x0, x1, x2 = r[i - 1], r[i], r[i + 1]
    y0, y1, y2 = v[i - 1], v[i], v[i + 1]
    d01 = (y1 - y0) / (x1 - x0)
    d12 = (y2 - y1) / (x2 - x1)
    a = (d12 - d01) / (x2 - x0)
    if a >= 0:
        return float(x1)
    # vertex of the interpolating parabola
    xv = 0.5 * (x0 + x1) - d01 / (2 * a)
    return float(min(max(xv, x0), x2))


# -- descent ----------------------------------------------------------------

def _lbfgs_direction(e, mem, precond):
    """Two-loop recursion; the seed matrix is the scaled inverse Sobolev metric."""
    q = e.copy()
    a = []
    for sk, yk, rho in reversed(mem):
        ai = rho * float(sk @ q)
        q -= ai * yk
        a.append(ai)
    z = precond(q)
    if mem:
        sk, yk, rho = mem[-1]
        z *= (1.0 / rho) / float(yk @ precond(yk))
    for (sk, yk, rho), ai in zip(mem, reversed(a)):
        bi = rho * float(yk @ z)
        z += (ai - bi) * sk
    return z


def minimize_on_nehari(fn, init, config=SolverConfig()):
    grid = fn.grid
    m = grid.mass
    u0 = np.abs(init.values if isinstance(init, Field) else np.asarray(init, dtype=float))
    if not np.any(u0 > 0):
        raise DegenerateInitError("init is identically zero")
    s = fn.state(u0)
    try:
        t = _project_ray(fn.ray(s))
    except ProjectionError as exc:
        raise DegenerateInitError(str(exc)) from exc
    s = fn.scaled(s, t)
    norm0 = math.sqrt(s.kin + s.mass2)
    if not norm0 > 0:
        raise DegenerateInitError("init projects to zero")
    gtol = config.grad_tol * norm0

    ab = stiffness_banded(grid)
    ab[1] += max(float(np.min(fn.kappa)), 0.0) * m

    def precond(x):
        return linalg.solveh_banded(ab, x, check_finite=False)

    J = fn.phi(s)
    trace = [J]
    mem = []                # (s_k, y_k, 1 / y_k.s_k) pairs for L-BFGS
    converged = False
    it = 0
    e = fn.euclid_gradient(s)
    while True:
        gnorm = math.sqrt(float(np.sum(e * e / m)))
        psi = fn.psi(s)
        if gnorm <= gtol and abs(psi) <= config.nehari_tol * (s.kin + s.mass2):
            converged = True
            break
        if it >= config.max_iters:
            break
        d = -_lbfgs_direction(e, mem, precond)
        slope = float(e @ d)
        if not slope < 0:
            mem.clear()
            d = -precond(e)
            slope = float(e @ d)
        alpha = config.step_init
        accepted = False
        while alpha > 1e-14:
            trial = np.abs(s.u + alpha * d)
            st = fn.state(trial)
            try:
                tt = _project_ray(fn.ray(st))
            except ProjectionError:
                alpha *= config.backtrack_factor
                continue
            st = fn.scaled(st, tt)
            Jt = fn.phi(st)
            if Jt <= J + config.armijo_c * alpha * slope:
                accepted = True
                break
            if abs(Jt - J) <= ENERGY_NOISE * abs(J):
                # the decrease is below the rounding floor of J; judge the
                # step by the gradient norm instead
                e_try = fn.euclid_gradient(st)
                if float(np.sum(e_try * e_try / m)) < gnorm * gnorm:
                    accepted = True
                    break
            alpha *= config.backtrack_factor
        if not accepted:
            if mem:
                mem.clear()     # retry once with the plain Sobolev gradient
                continue
            break
        it += 1
        e_new = fn.euclid_gradient(st)
        sk = st.u - s.u
        yk = e_new - e
        sy = float(sk @ yk)
        if sy > 1e-12 * math.sqrt(float(sk @ sk) * float(yk @ yk)):
            mem.append((sk, yk, 1.0 / sy))
            if len(mem) > LBFGS_MEMORY:
                mem.pop(0)
        s, J, e = st, Jt, e_new
        trace.append(J)
        if math.sqrt(s.kin + s.mass2) < 1e-10 * norm0:
            raise DegenerateInitError("iterate collapsed to zero")

    u = Field(grid, s.u)
    try:
        beta, _ = decay_fit(u)
    except InsufficientTailError:
        beta = math.nan
    return SolveReport(u, J, gnorm, fn.psi(s), fn.pohozaev(s), it, beta, max_point(u),
                       converged, gtol, trace)


def ground_state(params, kernel, config=SolverConfig(), init=None):
    if init is None:
        init = kernel.grid.sample(lambda r: np.exp(-r * r / 2))
    return minimize_on_nehari(Functional(params, kernel), init, config)


def worker_count():
    env = os.environ.get("CHOQUARD_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"CHOQUARD_THREADS must be an integer, got {env!r}")
        return max(1, n)
    return os.cpu_count() or 1


def parallel_map(func, items):
    """Map in a thread pool sized by CHOQUARD_THREADS; results keep input order."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(func, items))


def level_monotonicity(params_a, params_b, kernel, config=SolverConfig(), init=None, tol=None):
    """Levels (m_A, m_B) for parameter sets ordered so that m_A <= m_B."""
    a, b = params_a, params_b
    if a.mu != b.mu or a.zeta != b.zeta:
        raise PreconditionError("mu and zeta must agree")
    gaps = (b.kappa - a.kappa, a.nu - b.nu, a.tau - b.tau)
    if min(gaps) < 0:
        raise PreconditionError(f"parameter ordering violated: {gaps}")
    ra, rb = parallel_map(lambda p: ground_state(p, kernel, config, init), (a, b))
    ma, mb = ra.energy, rb.energy
    if tol is None:
        tol = 1e-8 * max(abs(ma), abs(mb))
    if ma > mb + tol:
        raise MonotonicityViolation(f"m_A={ma!r} exceeds m_B={mb!r}")
    if max(gaps) > 0 and not ma < mb:
        raise MonotonicityViolation(f"expected strict inequality, got m_A={ma!r}, m_B={mb!r}")
    return ma, mb
