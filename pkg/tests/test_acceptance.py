"""Acceptance gate: criteria 1-9, one PASS/FAIL line each.

Run alone with ``pytest -v tests/test_acceptance.py``; the lines are repeated in
the terminal summary.  Criteria 4 and 8 share one Monte Carlo run (n = 300,
M = 2000), which dominates the wall time.
"""
import math

import numpy as np
import pytest

from ellipstat.atoms import (AtomPairSpec, DiagonalSpec, TruncationPolicy, sample_diags,
                             sample_pairs, truncate_standardize, truncation_stats)
from ellipstat.ensemble import normalize, sample_elliptic
from ellipstat.harness import (ExperimentConfig, run_clt_experiment, run_esd_experiment,
                               run_lsv_experiment)
from ellipstat.stats import (eigenvalues, linear_stat_eigen, linear_stat_faber,
                             linear_stat_resolvent)
from ellipstat.theory import (TestFunction, TheoryMoments, beta, cov_contour, cov_series,
                              cov_upsilon_form, faber_coeffs, offset_points,
                              shcherbina_variance, stieltjes_m, upsilon)

RHO_GRID = np.round(np.linspace(-1.0, 1.0, 21), 10)


def _outside(rho, k, rng, dmin=0.02):
    theta = rng.uniform(0, 2 * np.pi, k)
    return offset_points(rho, dmin + rng.exponential(1.0, k), theta)


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


# -- 1 ----------------------------------------------------------------------------------

def test_criterion_1_analytic_identities(acceptance):
    rng = np.random.default_rng(1)
    worst_fp = worst_abs = worst_sym = worst_fd = 0.0
    for rho in RHO_GRID:
        z = _outside(rho, 1000, rng)
        m = stieltjes_m(z, rho)
        worst_fp = max(worst_fp, float(np.max(np.abs(m + 1 / (z + rho * m)))))
        worst_abs = max(worst_abs, float(np.max(np.abs(m))))
    for rho in (-0.9, -0.3, 0.0, 0.5, 0.9):
        mom = TheoryMoments(rho, 1.0 + abs(rho), 1.0 + 2 * rho * rho)
        z, w = _outside(rho, 200, rng, 0.1), _outside(rho, 200, rng, 0.1)
        worst_sym = max(worst_sym, float(np.max(np.abs(beta(z, w, mom) - beta(w, z, mom)))),
                        float(np.max(np.abs(upsilon(z, w, mom) - upsilon(w, z, mom)))))
        h = 1e-4
        for z0, w0 in zip(z[:5], w[:5]):
            def phi(a, b):
                return stieltjes_m(a, rho) * stieltjes_m(b, rho) * beta(a, b, mom)
            fd = (phi(z0 + h, w0 + h) - phi(z0 + h, w0 - h) - phi(z0 - h, w0 + h)
                  + phi(z0 - h, w0 - h)) / (4 * h * h)
            worst_fd = max(worst_fd, _rel(upsilon(z0, w0, mom), fd))
    ok = worst_fp < 1e-12 and worst_abs < 1 and worst_sym < 1e-10 and worst_fd < 1e-6
    acceptance(1, ok, f"fixed point {worst_fp:.2e}, max|m| {worst_abs:.6f}, "
                      f"symmetry {worst_sym:.2e}, FD rel {worst_fd:.2e}")
    assert ok


# -- 2 ----------------------------------------------------------------------------------

def test_criterion_2_route_equivalence(acceptance):
    worst = 0.0
    for rho in (-0.9, -0.5, 0.0, 0.5, 0.9):
        fs = [TestFunction.faber(j, rho) for j in range(1, 6)]
        fs += [TestFunction.monomial(2), TestFunction.exponential(0.25)]
        for s2, kappa in ((1 + rho, 1 + 2 * rho * rho), (0.5, 2.0), (2.0, 1.0)):
            mom = TheoryMoments(rho, s2, kappa)
            for i, f in enumerate(fs):
                for g in fs[i:]:
                    s = cov_series(f, g, mom)
                    c = cov_contour(f, g, mom)
                    u = cov_upsilon_form(f, g, mom)
                    # entries that vanish exactly are compared on the scale of Var f
                    scale = max(abs(s), math.sqrt(abs(cov_series(f, f, mom)
                                                      * cov_series(g, g, mom))))
                    worst = max(worst, abs(c - s) / scale, abs(u - s) / scale)
    ok = worst < 1e-6
    acceptance(2, ok, f"max relative disagreement {worst:.2e}")
    assert ok


# -- 3 ----------------------------------------------------------------------------------

def test_criterion_3_special_cases(acceptance):
    iid = TheoryMoments(0.0, 1.0, 1.0)
    bergman = 0.0
    for j in range(1, 6):
        f = TestFunction.monomial(j)
        for route in (cov_series, cov_contour, cov_upsilon_form):
            bergman = max(bergman, abs(route(f, f, iid) - j))
    wigner = 0.0
    fs = [TestFunction.monomial(1), TestFunction.monomial(2), TestFunction.faber(3, 1.0),
          TestFunction.faber(4, 1.0)]
    for s2, mu4 in ((2.0, 3.0), (1.0, 1.0), (0.5, 4.0)):
        for f in fs:
            wigner = max(wigner, abs(cov_series(f, f, TheoryMoments(1.0, s2, mu4))
                                     - shcherbina_variance(f, s2, mu4)))
    exact = (abs(shcherbina_variance(fs[0], 2.0, 3.0) - 2.0),
             abs(shcherbina_variance(fs[1], 2.0, 3.0) - 4.0))
    ok = bergman < 1e-6 and wigner < 1e-6 and max(exact) < 1e-6
    acceptance(3, ok, f"monomials {bergman:.2e}, rho=1 vs Wigner formula {wigner:.2e}, "
                      f"exact values {max(exact):.2e}")
    assert ok


# -- 4 and 8 ------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def clt_run():
    cfg = ExperimentConfig(kind="clt", n=300, samples=2000, seed=20240601,
                           pair=AtomPairSpec.gaussian(0.5), diag=DiagonalSpec.gaussian(1.5),
                           functions=tuple(TestFunction.faber(j, 0.5) for j in range(1, 5)))
    return run_clt_experiment(cfg)


@pytest.mark.slow
def test_criterion_4_clt_monte_carlo(clt_run, acceptance):
    cov, _ = clt_run
    expected = np.diag([1.5, 2.5, 3.375, 4.25])
    theory_ok = np.allclose(cov.theory_series, expected, atol=1e-10)
    z1 = cov.max_abs_z

    cfg0 = ExperimentConfig(kind="clt", n=300, samples=2000, seed=20240602,
                            pair=AtomPairSpec.gaussian(0.0), diag=DiagonalSpec.gaussian(1.0),
                            functions=tuple(TestFunction.monomial(j) for j in (1, 2, 3)))
    cov0, _ = run_clt_experiment(cfg0)
    theory0_ok = np.allclose(np.diag(cov0.theory_series), [1, 2, 3], atol=1e-10)
    z0 = float(np.max(np.abs(np.diag(cov0.zscores))))

    ok = theory_ok and theory0_ok and z1 <= 5 and z0 <= 5 and cov.dropped == cov0.dropped == 0
    diag = ", ".join(f"{v:.3f}" for v in np.diag(cov.empirical))
    diag0 = ", ".join(f"{v:.3f}" for v in np.diag(cov0.empirical))
    acceptance(4, ok, f"rho=0.5 diag [{diag}] max|z| {z1:.2f}; "
                      f"rho=0 z^j vars [{diag0}] max|z| {z0:.2f}")
    assert ok


@pytest.mark.slow
def test_criterion_8_normality(clt_run, acceptance):
    _, norm = clt_run
    row = next(r for r in norm.rows if r.function_id == "F_3")
    ok = row.passed(0.15, 0.3, 1e-3)
    acceptance(8, ok, f"F_3 skew {row.skewness:.3f}, excess kurtosis "
                      f"{row.excess_kurtosis:.3f}, JB p {row.jb_pvalue:.3g}")
    assert ok


# -- 5 ----------------------------------------------------------------------------------

def test_criterion_5_per_matrix_routes(acceptance):
    rng = np.random.default_rng(5)
    rho = 0.5
    worst_faber = worst_res = 0.0
    for k in range(20):
        X = normalize(sample_elliptic(100, AtomPairSpec.gaussian(rho), DiagonalSpec.gaussian(1.5),
                                      seed=1000 + k))
        spec = eigenvalues(X)
        deg = int(rng.integers(1, 9))
        f = TestFunction.polynomial(rng.normal(size=deg + 1))
        ev = linear_stat_eigen(f, spec).value
        scale = max(1.0, abs(ev))
        a = faber_coeffs(f, deg, 0.9, rho)
        worst_faber = max(worst_faber, abs(linear_stat_faber(a, X, rho).value - ev) / scale)
        worst_res = max(worst_res, abs(linear_stat_resolvent(f, X).value - ev) / scale)
    ok = worst_faber < 1e-8 and worst_res < 1e-6
    acceptance(5, ok, f"eigen vs Faber {worst_faber:.2e}, eigen vs resolvent {worst_res:.2e}")
    assert ok


# -- 6 ----------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_6_elliptic_law(acceptance):
    cfg = ExperimentConfig(kind="esd", n=2000, samples=5, seed=6,
                           pair=AtomPairSpec.gaussian(0.5), diag=DiagonalSpec.gaussian(1.5))
    rep = run_esd_experiment(cfg)
    frac = rep.containment[0.05]
    ok = frac >= 0.99 and rep.pvalue > 1e-3
    acceptance(6, ok, f"inside E(0.05) {frac:.5f}, chi2 {rep.chi2:.1f} on {rep.dof} dof, "
                      f"p {rep.pvalue:.3g}")
    assert ok


# -- 7 ----------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_7_least_singular_value(acceptance):
    cfg = ExperimentConfig(kind="lsv", n=200, samples=50, seed=7, delta=0.5,
                           pair=AtomPairSpec.gaussian(0.5), diag=DiagonalSpec.gaussian(1.5))
    rep = run_lsv_experiment(cfg)
    ok = rep.overall_min > 0.05 and rep.eig_sigma_max < 1e-6 and rep.grid.size == 200
    acceptance(7, ok, f"min sigma over {rep.grid.size} points x {rep.trial_minima.size} "
                      f"trials {rep.overall_min:.4f}, max sigma at eigenvalues "
                      f"{rep.eig_sigma_max:.2e}")
    assert ok


# -- 9 ----------------------------------------------------------------------------------

def test_criterion_9_truncation_and_continuity(acceptance):
    rng = np.random.default_rng(9)
    pol = TruncationPolicy(0.1, enabled=True)
    worst = 0.0
    heavy = DiagonalSpec.custom([-30.0, -1.0, 1.0, 30.0], [0.0005, 0.4995, 0.4995, 0.0005])
    for n in (10, 100, 1000):
        st = truncation_stats(heavy, pol, n)
        out = truncate_standardize(sample_diags(heavy, rng, 10 ** 6), pol, n, st)
        worst = max(worst, float(np.max(np.abs(out))) / (4 * pol.cutoff(n)))
        pair = AtomPairSpec.gaussian(0.5)
        sts = truncation_stats(pair, pol, n)
        outs = truncate_standardize(sample_pairs(pair, rng, 10 ** 6), pol, n, sts)
        worst = max(worst, max(float(np.max(np.abs(o))) for o in outs) / (4 * pol.cutoff(n)))
    z = offset_points(0.0, 1e-3 + rng.exponential(1.0, 1000), rng.uniform(0, 2 * np.pi, 1000))
    cont = float(np.max(np.abs(stieltjes_m(z, 1e-6) - stieltjes_m(z, 0.0))))
    ok = worst <= 1.0 and cont < 1e-4
    acceptance(9, ok, f"max |x|/(4 cutoff) {worst:.3f}, |m_1e-6 - m_0| {cont:.2e}")
    assert ok


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(pytest.main(["-v", __file__]))
