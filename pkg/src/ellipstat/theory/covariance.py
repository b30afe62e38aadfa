"""Limiting covariance of linear statistics, by three independent routes.

* :func:`cov_contour`: ``-1/(4 pi^2) oint oint f_i'(z) f_j'(w) m(z) m(w) beta(z,w) dz dw``
* :func:`cov_upsilon_form`: ``-1/(4 pi^2) oint oint f_i(z) f_j(w) upsilon(z,w) dz dw``
* :func:`cov_series`: closed form in the Faber coefficients ``a_l``,

      (s2 - rho - 1) a_1 a_1 + 2 (kappa - 2 rho^2 - 1) a_2 a_2 + sum_l l (1 + rho^l) a_l a_l.

The factor 2 on the fourth-moment term is what the kernel ``beta`` produces after
differentiation (``d/du [u^2] = 2u``); it reproduces ``Var tr X^2 -> 2 (kappa - rho^2)``
and the Wigner variance formula at ``rho = 1``.

:func:`shcherbina_variance` is the classical Wigner (``rho = 1``) formula used as
an outside cross-check.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import GeometryError, QuadratureError, TruncationError
from .faber import faber_coeffs
from .functions import TestFunction
from .geometry import ContourSpec
from .kernels import TheoryMoments, beta_u, upsilon_u
from .stieltjes import stieltjes_m, stieltjes_m_prime

__all__ = ["cov_series", "cov_contour", "cov_upsilon_form", "shcherbina_variance",
           "split_real_condition", "covariance_matrix", "default_contour",
           "DEFAULT_L", "DEFAULT_R", "DEFAULT_NODES", "DEFAULT_DELTA"]

DEFAULT_L = 64
DEFAULT_R = 0.9
DEFAULT_NODES = 512
DEFAULT_DELTA = 0.5


def _result(value, fi, fj, imag_tol=1e-9):
    value = complex(value)
    if fi.is_real and fj.is_real and abs(value.imag) <= imag_tol * max(1.0, abs(value.real)):
        return value.real
    return value


def series_weights(mom: TheoryMoments, L):
    """Diagonal weights ``w_l`` with ``Cov = sum_l w_l a_l(f_i) a_l(f_j)``."""
    l = np.arange(L + 1, dtype=float)
    w = l * (1.0 + mom.rho ** l)
    w[0] = 0.0
    if L >= 1:
        w[1] += mom.sigma_sq - mom.rho - 1.0
    if L >= 2:
        w[2] += 2.0 * mom.fourth_cross
    return w


def cov_series(fi: TestFunction, fj: TestFunction, mom: TheoryMoments, L=DEFAULT_L,
               r=DEFAULT_R, tail_tol=1e-10, return_tail=False):
    """Closed-form covariance from truncated Faber expansions.

    The tail bound is ``L (1+|rho|^L) |a_L(f_i)| |a_L(f_j)|`` times a geometric
    factor estimated from the last two coefficients; a bound above
    ``tail_tol * max(1, |value|)`` raises :class:`TruncationError`.
    """
    ai = faber_coeffs(fi, L, r, mom.rho)
    aj = faber_coeffs(fj, L, r, mom.rho)
    w = series_weights(mom, L)
    value = np.sum(w * ai * aj)
    tail = _tail_bound(ai, aj, L)
    if tail > tail_tol * max(1.0, abs(value)):
        raise TruncationError(f"Faber series tail {tail:.3g} has not decayed at L = {L}")
    value = _result(value, fi, fj)
    return (value, tail) if return_tail else value


def _tail_bound(ai, aj, L):
    mags = np.abs(ai * aj)
    last = mags[-1]
    # coefficients at quadrature round-off level: the expansion has terminated
    floor = 1e-24 * max(1.0, float(np.max(np.abs(ai))) * float(np.max(np.abs(aj))))
    if max(mags[-1], mags[-2]) <= floor:
        return 0.0
    ratio = mags[-1] / mags[-2] if mags[-2] > 0 else 1.0
    if ratio >= 1.0:
        return math.inf
    return 2.0 * L * last * ratio / (1.0 - ratio) ** 2


def default_contour(rho, delta=DEFAULT_DELTA, nodes=DEFAULT_NODES):
    """Joukowski contour at distance ``delta/2`` from ``E_rho``."""
    return ContourSpec.for_gap(rho, 0.5 * delta, nodes)


def _check_contour(contour: ContourSpec, rho, fns):
    if contour.min_distance(rho) <= 0.0:
        raise GeometryError("contour intersects E_rho")
    for f in fns:
        for p in f.singularities():
            if abs(contour.winding_number(p)) > 1e-6:
                raise GeometryError(f"singularity {p} of {f.label} lies inside the contour")


def _double_integral(kernel_u, left, right, contour, rho, use_derivative, tol, max_nodes):
    """Tensor trapezoid of ``-1/(4pi^2) sum g_i(z_k) g_j(w_l) K(z_k, w_l) dz_k dw_l``."""

    # On a Joukowski contour built for the same rho, m(z_k) = r w^k with w = e^{-2 pi i/K},
    # so m(z_k) m(w_l) = m_0 m_{(k+l) mod K} and the double sum is a cyclic convolution.
    # Reversing both contours leaves the double integral unchanged, so use ccw nodes.
    hankel = contour.family == "joukowski" and contour.rho == rho
    if hankel:
        contour = ContourSpec.joukowski(rho, contour.param, contour.nodes, "ccw")

    def at(K):
        z, dz = contour.points(K)
        m = np.asarray(stieltjes_m(z, rho, check=False))
        if use_derivative:
            a = left.derivative(z) * m * dz
            b = right.derivative(z) * m * dz
        else:
            dm = np.asarray(stieltjes_m_prime(z, rho, m))
            a = left(z) * dm * dz
            b = right(z) * dm * dz
        if hankel:
            conv = np.fft.ifft(np.fft.fft(a) * np.fft.fft(b))
            total = np.sum(kernel_u(m[0] * m) * conv)
        else:
            total = a @ kernel_u(np.outer(m, m)) @ b
        return -total / (4.0 * np.pi ** 2)

    K = contour.nodes
    prev = at(K)
    while 2 * K <= max_nodes:
        K *= 2
        cur = at(K)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise QuadratureError(f"contour quadrature did not converge with {max_nodes} nodes")


def cov_contour(fi: TestFunction, fj: TestFunction, mom: TheoryMoments,
                contour: ContourSpec | None = None, tol=1e-8, max_nodes=4096):
    """Covariance from the ``f' f' m m beta`` double contour integral."""
    contour = contour or default_contour(mom.rho)
    _check_contour(contour, mom.rho, (fi, fj))
    val = _double_integral(lambda u: beta_u(u, mom), fi, fj, contour, mom.rho, True,
                           tol, max_nodes)
    return _result(val, fi, fj)


def cov_upsilon_form(fi: TestFunction, fj: TestFunction, mom: TheoryMoments,
                     contour: ContourSpec | None = None, tol=1e-8, max_nodes=4096):
    """Covariance from the ``f f upsilon`` double contour integral."""
    contour = contour or default_contour(mom.rho)
    _check_contour(contour, mom.rho, (fi, fj))
    val = _double_integral(lambda u: upsilon_u(u, mom), fi, fj, contour, mom.rho, False,
                           tol, max_nodes)
    return _result(val, fi, fj)


def covariance_matrix(functions, mom: TheoryMoments, method="series", **kw):
    """Symmetric ``k x k`` matrix of limiting covariances."""
    route = {"series": cov_series, "contour": cov_contour, "upsilon": cov_upsilon_form}[method]
    k = len(functions)
    real = all(f.is_real for f in functions)
    C = np.zeros((k, k), dtype=float if real else complex)
    for i in range(k):
        for j in range(i, k):
            C[i, j] = C[j, i] = route(functions[i], functions[j], mom, **kw)
    return C


def _cheb_gauss(K):
    theta = (2.0 * np.arange(1, K + 1) - 1.0) * np.pi / (2.0 * K)
    return 2.0 * np.cos(theta), np.pi / K


def _shcherbina_at(f, sigma_sq, fourth_moment, K):
    x, w = _cheb_gauss(K)
    fx = np.real(np.asarray(f(x + 0j)))
    dfx = np.real(np.asarray(f.derivative(x + 0j)))
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    D = (fx[:, None] - fx[None, :]) / dx
    np.fill_diagonal(D, dfx)
    t1 = w * w * np.sum(D * D * (4.0 - np.outer(x, x))) / (2.0 * np.pi ** 2)
    t2 = (fourth_moment - 3.0) / (2.0 * np.pi ** 2) * (w * np.sum(fx * (2.0 - x * x))) ** 2
    t3 = (sigma_sq - 2.0) / (4.0 * np.pi ** 2) * (w * np.sum(fx * x)) ** 2
    return t1 + t2 + t3


def shcherbina_variance(f: TestFunction, sigma_sq, fourth_moment, nodes=64, tol=1e-10,
                        max_nodes=8192):
    """Limiting variance of ``tr f(X)`` for a real symmetric Wigner matrix.

    All integrals carry the arcsine weight ``1/sqrt(4 - x^2)`` and are done by
    Chebyshev-Gauss quadrature; on the diagonal the divided difference is ``f'(x)``.
    """
    K = nodes
    prev = _shcherbina_at(f, sigma_sq, fourth_moment, K)
    while 2 * K <= max_nodes:
        K *= 2
        cur = _shcherbina_at(f, sigma_sq, fourth_moment, K)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return float(cur)
        prev = cur
    raise QuadratureError("Chebyshev-Gauss quadrature did not converge")


def split_real_condition(f: TestFunction, rho, L=DEFAULT_L, r=DEFAULT_R):
    """``f = g + i h`` with ``g, h`` real Faber series (both satisfy the reality condition)."""
    a = faber_coeffs(f, L, r, rho)
    a = np.where(np.abs(a) < 1e-14 * max(1.0, np.max(np.abs(a))), 0.0, a)
    name = f.label
    g = TestFunction.faber_series(np.real(a), rho, name=f"Re[{name}]")
    h = TestFunction.faber_series(np.imag(a), rho, name=f"Im[{name}]")
    return g, h
