import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from choquard import constants
from choquard.errors import DomainError, GridMismatchError
from choquard.grid import Field, make_grid
from choquard.riesz import (angular_integral, build_kernel, cached_kernel, clear_kernel_cache,
                            double_energy, riesz_apply)

GL_X, GL_W = np.polynomial.legendre.leggauss(64)


def angular_gauss(r, s, mu):
    """int_{-1}^{1} (r^2 + s^2 - 2 r s t)^{-mu/2} dt by 64-point Gauss-Legendre."""
    return float(np.sum(GL_W * (r * r + s * s - 2 * r * s * GL_X) ** (-mu / 2)))


def gaussian_potential(r, mu):
    """(|.|^-mu * exp(-|y|^2))(r) in closed form via Kummer's function."""
    return float(mp.pi ** 1.5 * mp.gamma((3 - mu) / 2) / mp.gamma(1.5) * mp.hyp1f1(mu / 2, 1.5, -r * r))


@pytest.mark.parametrize("mu", (0.5, 1.0, 1.5, 2.0, 2.5))
@pytest.mark.parametrize("rs", [(1.0, 2.0), (0.3, 0.5), (5.0, 0.7), (1.0, 1.3)])
def test_angular_closed_form(mu, rs):
    r, s = rs
    assert angular_integral(r, s, mu) == pytest.approx(angular_gauss(r, s, mu), rel=1e-10)


@pytest.mark.parametrize("mu", (0.5, 1.0, 2.0, 2.5))
def test_angular_small_r_limit(mu):
    assert angular_integral(1e-8, 1.0, mu) == pytest.approx(2.0, rel=1e-8)
    assert angular_integral(1e-8, 2.0, mu) == pytest.approx(2.0 * 2.0 ** -mu, rel=1e-8)


def test_mu2_branch_continuity():
    a2 = angular_integral(1.0, 2.0, 2.0)
    for mu in (2 - 1e-6, 2 + 1e-6):
        assert abs(angular_integral(1.0, 2.0, mu) / a2 - 1) < 1e-4
    assert a2 == pytest.approx(math.log(3.0) / 2.0, rel=1e-15)


def test_gaussian_potential_oracle_consistent_with_quadrature():
    # the Kummer closed form itself against a 2-D adaptive quadrature (mu = 1)
    r, mu = 1.0, 1.0
    f = lambda t, s: 2 * math.pi * s * s * math.exp(-s * s) * (r * r + s * s - 2 * r * s * t) ** (-mu / 2)
    v = sum(integrate.dblquad(f, a, b, -1, 1, epsabs=0, epsrel=1e-11)[0] for a, b in ((0, r), (r, 12)))
    assert v == pytest.approx(gaussian_potential(r, mu), rel=1e-9)


@pytest.mark.parametrize("mu", (0.5, 1.0, 2.5))
@pytest.mark.parametrize("grid", [make_grid(12, 2000), make_grid(40, 4000, 7.0)], ids=["uniform", "stretched"])
def test_convolution_of_gaussian(mu, grid):
    K = build_kernel(grid, mu)
    V = riesz_apply(K, grid.sample(lambda r: np.exp(-r * r))).values
    for x in (0.05, 0.3, 1.0, 2.0, 5.0):
        i = int(np.argmin(np.abs(grid.nodes - x)))
        assert V[i] == pytest.approx(gaussian_potential(grid.nodes[i], mu), rel=1e-5)


def test_zero_and_positivity(small_kernel, rng):
    g = small_kernel.grid
    z = Field(g, np.zeros(g.n))
    assert np.all(riesz_apply(small_kernel, z).values == 0)
    assert double_energy(small_kernel, z, g.sample(np.exp)) == 0
    f = Field(g, rng.uniform(0, 1, g.n))
    assert np.all(riesz_apply(small_kernel, f).values >= 0)
    assert np.all(small_kernel.matrix >= 0) and np.all(np.isfinite(small_kernel.matrix))


def test_newtonian_far_field():
    # mu = 1: outside a radial mass the potential is exactly M / r
    g = make_grid(10, 2000)
    K = build_kernel(g, 1.0)
    f = g.sample(lambda r: np.where(r < 1, (1 - r * r) ** 2, 0.0))
    M = 4 * math.pi * integrate.quad(lambda r: r * r * (1 - r * r) ** 2, 0, 1)[0]
    V = riesz_apply(K, f).values
    i = int(np.argmin(np.abs(g.nodes - 4.0)))
    assert V[i] == pytest.approx(M / g.nodes[i], rel=1e-3)


def _positive_profile(coeffs):
    a, c, w = coeffs
    return lambda r: a * np.exp(-((r - c) / w) ** 2)


profile = st.tuples(st.floats(0.2, 2.0), st.floats(0.0, 3.0), st.floats(0.3, 2.0))


@given(profile, profile)
def test_symmetry(small_kernel, p1, p2):
    g = small_kernel.grid
    f, h = g.sample(_positive_profile(p1)), g.sample(_positive_profile(p2))
    a, b = double_energy(small_kernel, f, h), double_energy(small_kernel, h, f)
    assert abs(a - b) <= 1e-12 * abs(a)
    # unsymmetrized sums agree too (Fubini on the weighted matrix)
    m = g.mass
    lhs = np.sum(m * f.values * (small_kernel.matrix @ h.values))
    rhs = np.sum(m * h.values * (small_kernel.matrix @ f.values))
    assert lhs == pytest.approx(rhs, rel=1e-12)


@given(profile, profile, st.floats(-3, 3), st.floats(-3, 3))
def test_bilinearity(small_kernel, p1, p2, a, b):
    g = small_kernel.grid
    f, h, k = g.sample(_positive_profile(p1)), g.sample(_positive_profile(p2)), g.sample(lambda r: np.exp(-r))
    lhs = double_energy(small_kernel, a * f + b * h, k)
    rhs = a * double_energy(small_kernel, f, k) + b * double_energy(small_kernel, h, k)
    scale = abs(a) * double_energy(small_kernel, f, k) + abs(b) * double_energy(small_kernel, h, k)
    assert abs(lhs - rhs) <= 1e-13 * scale


def test_grid_mismatch(small_kernel):
    other = make_grid(13, 600)
    with pytest.raises(GridMismatchError):
        riesz_apply(small_kernel, other.sample(np.exp))
    with pytest.raises(GridMismatchError):
        double_energy(small_kernel, small_kernel.grid.sample(np.exp), np.ones(5))


def test_domain():
    g = make_grid(5, 50)
    for mu in (0.0, 3.0):
        with pytest.raises(DomainError):
            build_kernel(g, mu)


@pytest.mark.parametrize("mu", (0.5, 1.0, 1.5, 2.0, 2.5))
def test_brute_force_coarse(mu):
    """n = 32: the bilinear form against direct radius x angle quadrature.

    Off the diagonal the angle uses 64 Gauss points and must agree to 1e-4.
    On the singular diagonal a direct cell integral of A_mu is only first
    order, so the whole form is compared with the exact continuum value of
    the Gaussian (Kummer potential) and must beat the cell-integral variant.
    """
    g = make_grid(6, 32)
    K = build_kernel(g, mu)
    r, h = g.nodes, g.h
    f = np.exp(-r * r)
    B = np.zeros((g.n, g.n))
    cell_diag = np.zeros(g.n)
    for i, ri in enumerate(r):
        for j, sj in enumerate(r):
            if i != j:
                B[i, j] = 2 * math.pi * sj * sj * g.weights[j] * angular_gauss(ri, sj, mu)
        cell = lambda s: 2 * math.pi * s * s * float(angular_integral(ri, s, mu))
        cell_diag[i] = integrate.quad(cell, max(ri - h / 2, 0), ri, limit=200)[0] \
            + integrate.quad(cell, ri, ri + h / 2, limit=200)[0]
    off = np.array(K.matrix)
    np.fill_diagonal(off, 0.0)
    m = g.mass
    assert np.sum(m * f * (off @ f)) == pytest.approx(np.sum(m * f * (B @ f)), rel=1e-4)

    exact = integrate.quad(lambda x: 4 * math.pi * x * x * math.exp(-x * x) * gaussian_potential(x, mu),
                           0, 6, epsabs=0, epsrel=1e-12)[0]
    ours = double_energy(K, f, f)
    np.fill_diagonal(B, cell_diag)
    cell_version = float(np.sum(m * f * (B @ f)))
    assert ours == pytest.approx(exact, rel=1e-3)
    assert abs(ours - exact) < abs(cell_version - exact)


@pytest.mark.parametrize("mu", (0.5, 1.0, 1.5, 2.0, 2.5))
@given(st.lists(profile, min_size=1, max_size=3))
def test_hls_inequality(hls_kernels, mu, parts):
    K = hls_kernels[mu]
    g = K.grid
    u = sum(_positive_profile(p)(g.nodes) for p in parts)
    f = u ** (6 - mu)
    t = 6 / (6 - mu)
    norm = float(np.sum(g.mass * f ** t)) ** (1 / t)
    assert double_energy(K, f, f) <= constants.hls_constant(mu) * norm ** 2 * (1 + 1e-3)


@pytest.fixture(scope="module")
def hls_kernels():
    g = make_grid(20, 1500, 3.0)
    return {mu: build_kernel(g, mu) for mu in (0.5, 1.0, 1.5, 2.0, 2.5)}


@pytest.mark.parametrize("mu", (0.5, 1.0, 2.0, 2.5))
def test_hls_extremal_attains_constant(hls_kernels, mu):
    K = hls_kernels[mu]
    g = K.grid
    h = (1 + g.nodes ** 2) ** (-(6 - mu) / 2)
    t = 6 / (6 - mu)
    norm = float(np.sum(g.mass * h ** t)) ** (1 / t)
    assert double_energy(K, h, h) / norm ** 2 == pytest.approx(constants.hls_constant(mu), rel=1e-3)


def test_u_tilde_hls_energy():
    # the Riesz energy of U~^(6-mu) equals S_HL^{(6-mu)/(5-mu)} on an R = 200 grid
    mu = 1.0
    g = make_grid(200, 3999)
    K = build_kernel(g, mu)
    f = constants.extremal_field(g, "U_tilde", mu=mu).values ** (6 - mu)
    A = constants.shl_constant(mu) ** ((6 - mu) / (5 - mu))
    assert double_energy(K, f, f) == pytest.approx(A, rel=1e-3)


def test_kernel_cache():
    clear_kernel_cache()
    g = make_grid(5, 100)
    a = cached_kernel(g, 1.0)
    assert cached_kernel(make_grid(5, 100), 1.0) is a
    assert cached_kernel(g, 1.5) is not a
    clear_kernel_cache()
    assert cached_kernel(g, 1.0) is not a
