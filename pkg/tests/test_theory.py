import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ellipstat.errors import (ConfigurationError, DomainError, GeometryError, QuadratureError)
from ellipstat.theory import (ContourSpec, EllipseGeometry, TestFunction, TheoryMoments, beta,
                              cov_contour, cov_series, cov_upsilon_form, covariance_matrix,
                              ellipse_distance, faber_coeffs, faber_eval, faber_table,
                              faber_to_power, joukowski_radius_for_gap, offset_points,
                              semi_axes, shcherbina_variance, split_real_condition,
                              stieltjes_m, stieltjes_m_prime, upsilon)
from ellipstat.theory.kernels import beta_u

RHOS = [-0.9, -0.5, 0.0, 0.5, 0.9]


def rel(a, b, floor=1.0):
    return abs(a - b) / max(floor, abs(b))


def outside_points(rho, k, rng, dmin=0.05):
    """Random points at distance >= dmin from E_rho."""
    a, b = semi_axes(rho)
    theta = rng.uniform(0, 2 * np.pi, k)
    d = dmin + rng.exponential(1.0, k)
    return offset_points(rho, d, theta)


# -- geometry -----------------------------------------------------------------

def test_semi_axes_and_degenerate_segments():
    assert semi_axes(0.5) == (1.5, 0.5)
    assert EllipseGeometry(1.0).degenerate
    assert EllipseGeometry(0.3).area == pytest.approx(math.pi * 1.3 * 0.7)


@pytest.mark.parametrize("z, rho, expected", [
    (1.5, 0.5, 0.0), (3.0, 1.0, 1.0), (2.5, 0.5, 1.0), (2.5j, -1.0, 0.5), (0.1, 0.2, 0.0),
    (3j, 1.0, 3.0), (1j, 0.0, 0.0), (2 + 0j, 0.0, 1.0)])
def test_ellipse_distance_examples(z, rho, expected):
    assert ellipse_distance(z, rho) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.95, 0.95), st.floats(0.0, 2 * np.pi), st.floats(0.01, 3.0))
def test_offset_points_are_at_the_requested_distance(rho, theta, d):
    z = offset_points(rho, d, theta)
    assert ellipse_distance(z, rho) == pytest.approx(d, rel=1e-9, abs=1e-12)


def test_ellipse_distance_brute_force():
    rng = np.random.default_rng(0)
    rho = 0.4
    a, b = semi_axes(rho)
    t = np.linspace(0, 2 * np.pi, 200001)
    boundary = a * np.cos(t) + 1j * b * np.sin(t)
    for z in rng.normal(size=20) * 2 + 1j * rng.normal(size=20) * 2:
        inside = (z.real / a) ** 2 + (z.imag / b) ** 2 <= 1
        brute = 0.0 if inside else np.min(np.abs(boundary - z))
        assert ellipse_distance(z, rho) == pytest.approx(brute, abs=1e-6)


def test_geometry_contains():
    g = EllipseGeometry(0.5, delta=0.1)
    assert g.contains(1.55) and not g.contains(1.65)


# -- contours -----------------------------------------------------------------

@pytest.mark.parametrize("rho", RHOS + [1.0, -1.0])
def test_joukowski_contour_encloses_and_runs_ccw(rho):
    c = ContourSpec.for_gap(rho, 0.25)
    assert c.min_distance(rho) == pytest.approx(0.25, abs=1e-6)
    assert c.winding_number(0.0) == pytest.approx(1.0)
    assert ContourSpec.for_gap(rho, 0.25, orientation="cw").winding_number(0.0) == \
        pytest.approx(-1.0)


def test_joukowski_image_of_circle_maps_m_to_s():
    rho, r = 0.5, 0.8
    z, _ = ContourSpec.joukowski(rho, r, 64).points()
    m = stieltjes_m(z, rho)
    assert np.allclose(np.abs(m), r)


def test_offset_contour_requires_nondegenerate_rho():
    with pytest.raises(GeometryError):
        ContourSpec.offset(1.0, 0.2).points()
    with pytest.raises(GeometryError):
        ContourSpec.joukowski(0.5, 1.2).points()
    with pytest.raises(GeometryError):
        ContourSpec.joukowski(0.5, 0.9, nodes=4).points()


def test_joukowski_radius_solves_gap():
    r = joukowski_radius_for_gap(0.3, 0.4)
    assert ContourSpec.joukowski(0.3, r, 4096).min_distance() == pytest.approx(0.4, abs=1e-8)


# -- m(z) -----------------------------------------------------------------------

@pytest.mark.parametrize("z, rho, expected", [
    (2.0, 0.0, -0.5), (3.0, 1.0, (-3 + math.sqrt(5)) / 2), (2.0, 0.5, -2 + math.sqrt(2))])
def test_stieltjes_examples(z, rho, expected):
    m = stieltjes_m(z, rho)
    assert m == pytest.approx(expected, abs=1e-12)
    assert abs(rho * m * m + z * m + 1) < 1e-12


@pytest.mark.parametrize("rho", np.round(np.linspace(-1, 1, 21), 10))
def test_stieltjes_fixed_point_and_root_selection(rho):
    rng = np.random.default_rng(int(1000 * (rho + 2)))
    z = outside_points(rho, 1000, rng)
    m = stieltjes_m(z, rho)
    assert np.max(np.abs(m + 1 / (z + rho * m))) < 1e-12
    assert np.all(np.abs(m) < 1)
    if rho != 0:
        assert np.all(np.abs(1 / (rho * m)) > 1)


def test_stieltjes_rejects_points_on_support():
    with pytest.raises(DomainError):
        stieltjes_m(0.3, 0.5)
    with pytest.raises(DomainError):
        stieltjes_m(1.5, 0.5)


def test_stieltjes_derivative_matches_finite_difference():
    z, rho, h = 2.0 + 1.0j, 0.5, 1e-6
    fd = (stieltjes_m(z + h, rho) - stieltjes_m(z - h, rho)) / (2 * h)
    assert stieltjes_m_prime(z, rho) == pytest.approx(fd, rel=1e-8)


@pytest.mark.parametrize("rho", [-0.5, 0.0, 0.5])
def test_stieltjes_continuity_in_rho(rho):
    rng = np.random.default_rng(5)
    z = outside_points(rho + 1e-6, 200, rng, dmin=0.1)
    assert np.max(np.abs(stieltjes_m(z, rho + 1e-6) - stieltjes_m(z, rho))) < 1e-4


# -- kernels --------------------------------------------------------------------

def test_beta_large_argument_limit():
    mom = TheoryMoments(0.3, 1.5, 1.2)
    assert beta(1e6, 1e6, mom) == pytest.approx(1.5, abs=1e-5)


def test_beta_closed_form_at_two():
    # u = 1/4: sigma^2 - 1 - log(3/4)/(1/4) with the -log(1-rho u)/u term vanishing at rho = 0
    mom = TheoryMoments(0.0, 1.0, 1.0)
    expected = 1.0 - 1.0 - 4 * math.log(0.75)
    assert beta(2.0, 2.0, mom) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(1.1507283, abs=1e-7)
    # the constant part is the only sigma^2 dependence
    assert beta(2.0, 2.0, TheoryMoments(0.0, 0.0, 1.0)) == pytest.approx(0.1507283, abs=1e-7)


def test_beta_series_branch_is_continuous():
    from ellipstat.theory.kernels import _SERIES_RADIUS
    mom = TheoryMoments(0.7, 1.3, 2.0)
    u = 0.999 * _SERIES_RADIUS * (1 + 1j) / math.sqrt(2)
    direct = (mom.sigma_sq - mom.rho - 1 - (np.log1p(-mom.rho * u) + np.log1p(-u)) / u
              + 0.5 * mom.fourth_cross * u)
    assert beta_u(u, mom) == pytest.approx(direct, abs=1e-10)
    assert beta_u(0.0, mom) == pytest.approx(1.3 - 0.7 - 1 + 0.7 + 1)


def test_kernel_symmetry():
    rng = np.random.default_rng(2)
    mom = TheoryMoments(0.5, 1.2, 2.1)
    z = outside_points(0.5, 100, rng)
    w = outside_points(0.5, 100, rng)
    assert np.max(np.abs(beta(z, w, mom) - beta(w, z, mom))) < 1e-10
    assert np.max(np.abs(upsilon(z, w, mom) - upsilon(w, z, mom))) < 1e-10


def test_upsilon_bergman_kernel():
    assert upsilon(2.0, 3.0, TheoryMoments(0.0, 1.0, 1.0)) == pytest.approx(0.04, abs=1e-14)


def _phi(z, w, mom):
    return stieltjes_m(z, mom.rho) * stieltjes_m(w, mom.rho) * beta(z, w, mom)


@pytest.mark.parametrize("mom", [TheoryMoments(0.5, 1.0, 1.5), TheoryMoments(-0.3, 2.0, 4.0),
                                 TheoryMoments(0.0, 0.2, 1.0)])
def test_upsilon_matches_finite_differences(mom):
    z, w, h = 2 + 1j, 3 - 0.5j, 1e-4
    fd = (_phi(z + h, w + h, mom) - _phi(z + h, w - h, mom) - _phi(z - h, w + h, mom)
          + _phi(z - h, w - h, mom)) / (4 * h * h)
    assert rel(upsilon(z, w, mom), fd, floor=0.0) < 1e-6


def test_theory_moments_validation():
    with pytest.raises(ConfigurationError, match="Cauchy-Schwarz"):
        TheoryMoments(1.2, 1.0, 2.0)
    with pytest.raises(ConfigurationError):
        TheoryMoments(0.5, 1.0, 0.1)
    assert TheoryMoments.gaussian(0.5) == TheoryMoments(0.5, 1.5, 1.5)


# -- Faber ----------------------------------------------------------------------

def test_faber_examples():
    assert faber_eval(0, 3.7 + 1j, 0.4) == 1
    assert faber_eval(2, 0.0, 0.7) == pytest.approx(-1.4)
    z = np.array([0.3 + 0.2j, -1.1, 2j])
    assert np.allclose(faber_eval(5, z, 0.0), z ** 5)


@pytest.mark.parametrize("rho", [0.25, 0.5, 0.9])
def test_faber_is_rescaled_chebyshev(rho):
    x = np.linspace(-2.5, 2.5, 11)
    for j in range(1, 8):
        T = np.polynomial.chebyshev.chebval(x / (2 * math.sqrt(rho)), [0] * j + [1])
        assert np.allclose(faber_eval(j, x, rho), 2 * rho ** (j / 2) * T)


def test_faber_derivative_and_power_basis():
    rho, z = 0.6, 0.7 - 0.4j
    F, dF = faber_table(6, z, rho, derivative=True)
    for j in range(7):
        c = faber_to_power(j, rho)
        assert np.polynomial.polynomial.polyval(z, c) == pytest.approx(F[j])
        h = 1e-6
        fd = (faber_eval(j, z + h, rho) - faber_eval(j, z - h, rho)) / (2 * h)
        assert dF[j] == pytest.approx(fd, abs=1e-7)


def test_faber_maps_joukowski_to_powers():
    rho, s = 0.5, 0.7 * np.exp(0.3j)
    z = rho * s + 1 / s
    for j in range(1, 6):
        assert faber_eval(j, z, rho) == pytest.approx(s ** -j + (rho * s) ** j)


def test_faber_coeffs_examples():
    a = faber_coeffs(TestFunction.monomial(1), 16, 0.9, 0.3)
    assert a[1] == pytest.approx(1.0)
    assert np.max(np.abs(np.delete(a, 1))) < 1e-10
    a = faber_coeffs(TestFunction.monomial(2), 16, 0.9, 0.5)
    assert a[0] == pytest.approx(1.0) and a[2] == pytest.approx(1.0)
    assert np.max(np.abs(np.delete(a, [0, 2]))) < 1e-10
    a = faber_coeffs(TestFunction.faber(3, 0.5), 16, 0.9, 0.5)
    assert a[3] == pytest.approx(1.0)
    assert np.max(np.abs(np.delete(a, 3))) < 1e-10


def test_faber_coeffs_reconstruct_exponential():
    rho = 0.4
    f = TestFunction.exponential(0.7)
    a = faber_coeffs(f, 40, 0.9, rho)
    z = np.array([0.3 + 0.1j, -1.0, 0.5j])
    assert np.allclose(np.tensordot(a, faber_table(40, z, rho), axes=1), f(z), atol=1e-12)


def test_faber_coeffs_fail_near_a_pole():
    # at rho = 0 the quadrature circle is |z| = 1/r, a hair inside the pole
    f = TestFunction.pole_shift(1.0 / 0.99 + 1e-4)
    with pytest.raises(QuadratureError):
        faber_coeffs(f, 32, 0.99, 0.0, max_nodes=1 << 9)


# -- test functions -------------------------------------------------------------

def test_reality_flag():
    assert TestFunction.polynomial([1, 2, 3]).is_real
    assert not TestFunction.polynomial([0, 1j]).is_real
    assert TestFunction.pole_shift(3.0).is_real
    assert not TestFunction.pole_shift(3.0 + 1j).is_real
    assert TestFunction.exponential(0.25).is_real


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6), st.complex_numbers(max_magnitude=3))
def test_reality_condition_characterisation(coeffs, z):
    f = TestFunction.polynomial(coeffs)
    v = f(z) + f(np.conj(z))
    assert abs(v.imag) <= 1e-9 * max(1.0, abs(v))


def test_function_round_trip():
    for f in [TestFunction.polynomial([1, 0.5j]), TestFunction.faber(3, 0.5),
              TestFunction.exponential(0.25), TestFunction.pole_shift(3.0),
              TestFunction.faber_series([0, 1, 0.5], 0.2)]:
        assert TestFunction.from_dict(f.to_dict()) == f
    assert TestFunction.from_dict({"kind": "monomial", "index": 2}).label == "z^2"


# -- covariance -----------------------------------------------------------------

def test_series_examples():
    mom = TheoryMoments(0.5, 0.7, 3.0)
    F = [TestFunction.faber(j, 0.5) for j in range(6)]
    assert cov_series(F[3], F[3], mom) == pytest.approx(3.375, abs=1e-12)
    assert cov_series(F[3], F[4], mom) == pytest.approx(0.0, abs=1e-12)
    assert cov_series(F[4], F[5], mom) == pytest.approx(0.0, abs=1e-12)
    w1 = TheoryMoments(1.0, 2.0, 3.0)
    assert cov_series(TestFunction.faber(1, 1.0), TestFunction.faber(1, 1.0), w1) == \
        pytest.approx(2.0)


def test_series_fourth_moment_term():
    # Var F_2 = 2(1 + rho^2) + 2(kappa - 2 rho^2 - 1)
    rho, kappa = 0.5, 2.3
    f = TestFunction.faber(2, rho)
    assert cov_series(f, f, TheoryMoments(rho, 1.0, kappa)) == \
        pytest.approx(2 * (1 + rho ** 2) + 2 * (kappa - 2 * rho ** 2 - 1))


def test_trace_square_variance_identity():
    # z^2 = F_2 + 2 rho F_0, so Var tr X^2 -> 2 (kappa - rho^2) whatever sigma^2 is
    for rho, kappa in [(0.0, 1.0), (0.5, 1.5), (0.5, 0.25), (-0.8, 2.0)]:
        f = TestFunction.monomial(2)
        for s2 in (0.0, 1.0, 3.0):
            got = cov_series(f, f, TheoryMoments(rho, s2, kappa))
            assert got == pytest.approx(2 * (kappa - rho ** 2), abs=1e-12)


@pytest.mark.parametrize("rho", RHOS)
def test_route_equivalence_f2(rho):
    mom = TheoryMoments(rho, 1.3, max(rho ** 2, 1.0) + 0.4)
    f = TestFunction.faber(2, rho)
    s = cov_series(f, f, mom)
    assert rel(cov_contour(f, f, mom), s) < 1e-6
    assert rel(cov_upsilon_form(f, f, mom), s) < 1e-6


def test_upsilon_matches_beta_route_f1():
    mom = TheoryMoments(0.5, 1.2, 1.9)
    f = TestFunction.faber(1, 0.5)
    assert abs(cov_upsilon_form(f, f, mom) - cov_contour(f, f, mom)) < 1e-8


def test_upsilon_route_orthogonality_and_symmetry():
    mom = TheoryMoments(0.5, 1.2, 1.9)
    f, g = TestFunction.faber(2, 0.5), TestFunction.faber(4, 0.5)
    assert abs(cov_upsilon_form(f, g, mom)) < 1e-8
    h = TestFunction.exponential(0.3)
    assert cov_upsilon_form(f, h, mom) == pytest.approx(cov_upsilon_form(h, f, mom), abs=1e-12)


def test_bergman_monomials_contour():
    mom = TheoryMoments(0.0, 1.0, 1.0)
    z3 = TestFunction.monomial(3)
    assert cov_contour(z3, z3, mom) == pytest.approx(3.0, abs=1e-8)


def test_contour_bilinearity_in_complex_coefficients():
    mom = TheoryMoments(0.3, 1.0, 1.5)
    real = TestFunction.polynomial([0.5, 1.0, -0.3])
    imag = TestFunction.polynomial([0.5j, 1.0j, -0.3j])
    g = TestFunction.exponential(0.4)
    assert cov_contour(imag, g, mom) == pytest.approx(1j * cov_contour(real, g, mom), abs=1e-10)


def test_offset_contour_agrees_with_joukowski():
    mom = TheoryMoments(0.5, 1.5, 1.5)
    f = TestFunction.exponential(0.25)
    assert rel(cov_contour(f, f, mom, ContourSpec.offset(0.5, 0.3)),
               cov_contour(f, f, mom)) < 1e-8


def test_contour_geometry_errors():
    mom = TheoryMoments(0.5, 1.0, 1.5)
    f = TestFunction.faber(2, 0.5)
    p = TestFunction.pole_shift(2.0)
    with pytest.raises(GeometryError):
        cov_contour(p, f, mom, ContourSpec.for_gap(0.5, 1.0))
    # a circle of radius 1.2 cuts through E_0.5 (semi-axis 1.5)
    with pytest.raises(GeometryError):
        cov_contour(f, f, mom, ContourSpec.circle(1.2))


def test_pole_function_route_equivalence():
    mom = TheoryMoments(0.3, 1.0, 1.5)
    p = TestFunction.pole_shift(2.5)
    contour = ContourSpec.for_gap(0.3, 0.3)
    s = cov_series(p, p, mom, r=0.5)
    assert rel(cov_contour(p, p, mom, contour), s) < 1e-6


def test_quadrature_node_doubling_converged():
    mom = TheoryMoments(0.5, 1.5, 1.5)
    f = TestFunction.exponential(0.25)
    c = ContourSpec.for_gap(0.5, 0.25, nodes=256)
    a = cov_contour(f, f, mom, c)
    b = cov_contour(f, f, mom, c.with_nodes(512))
    assert abs(a - b) < 1e-10


def test_reality_of_outputs():
    mom = TheoryMoments(-0.4, 0.8, 2.0)
    f, g = TestFunction.exponential(0.25), TestFunction.polynomial([0, 1, 0, 0.2])
    for route in (cov_series, cov_contour, cov_upsilon_form):
        assert isinstance(route(f, g, mom), float)


def test_covariance_matrix_symmetric():
    mom = TheoryMoments(0.5, 1.5, 1.5)
    fs = [TestFunction.faber(j, 0.5) for j in range(1, 5)]
    C = covariance_matrix(fs, mom)
    assert np.allclose(C, C.T)
    assert np.allclose(np.diag(C), [1.5, 2.5, 3.375, 4.25])
    assert np.allclose(C - np.diag(np.diag(C)), 0, atol=1e-12)


# -- Wigner cross-check ----------------------------------------------------------

@pytest.mark.parametrize("f, s2, mu4, expected", [
    (TestFunction.monomial(1), 2.0, 3.0, 2.0), (TestFunction.monomial(2), 2.0, 3.0, 4.0)])
def test_shcherbina_exact_values(f, s2, mu4, expected):
    assert shcherbina_variance(f, s2, mu4) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("s2, mu4", [(2.0, 3.0), (0.5, 1.0), (1.0, 5.0)])
@pytest.mark.parametrize("f", [TestFunction.monomial(1), TestFunction.monomial(2),
                               TestFunction.faber(3, 1.0), TestFunction.faber(4, 1.0),
                               TestFunction.exponential(0.5)])
def test_shcherbina_matches_series_at_rho_one(f, s2, mu4):
    got = cov_series(f, f, TheoryMoments(1.0, s2, mu4))
    assert abs(got - shcherbina_variance(f, s2, mu4)) < 1e-6 * max(1.0, abs(got))


# -- splitting ------------------------------------------------------------------

def test_split_real_function():
    f = TestFunction.polynomial([1.0, -2.0, 0.5])
    g, h = split_real_condition(f, 0.3)
    z = 0.4 + 0.3j
    assert g(z) == pytest.approx(f(z))
    assert abs(h(z)) < 1e-12


def test_split_iz():
    g, h = split_real_condition(TestFunction.polynomial([0, 1j]), 0.5)
    z = 1.2 - 0.7j
    assert abs(g(z)) < 1e-12
    assert h(z) == pytest.approx(z)
    assert g.is_real and h.is_real


def test_split_reconstruction():
    rng = np.random.default_rng(9)
    f = TestFunction.exponential(0.3 + 0.5j)
    g, h = split_real_condition(f, 0.4)
    z0 = rng.normal(size=10) + 1j * rng.normal(size=10)
    z0 *= 0.8 / np.abs(z0).max()
    assert np.allclose(g(z0) + 1j * h(z0), f(z0), atol=1e-10)


# -- fourth-moment coefficient, Monte Carlo ---------------------------------------

def test_trace_square_variance_monte_carlo():
    # Rademacher pairs have kappa = 1 and Rademacher diagonals make sum zeta^2 constant, so
    # tr Y^2 - n = 2 sum_{i<j} xi eta and Var tr X^2 = 2 (n - 1)(1 - rho^2) / n exactly
    from ellipstat.atoms import AtomPairSpec, DiagonalSpec
    from ellipstat.ensemble import normalize, sample_elliptic
    rho, n, M = 0.5, 40, 4000
    vals = np.empty(M)
    for k in range(M):
        X = normalize(sample_elliptic(n, AtomPairSpec.rademacher(rho), DiagonalSpec.rademacher(),
                                      seed=k)).entries
        vals[k] = np.sum(X * X.T)
    exact = 2 * (n - 1) * (1 - rho ** 2) / n
    se = exact * math.sqrt(2 / (M - 1)) * 1.5
    assert abs(vals.var(ddof=1) - exact) < 4 * se
    limit = cov_series(TestFunction.monomial(2), TestFunction.monomial(2),
                       TheoryMoments(rho, 1.0, 1.0))
    assert limit == pytest.approx(2 * (1 - rho ** 2))
    assert abs(vals.var(ddof=1) - limit) < 4 * se + 2 * (1 - rho ** 2) / n
