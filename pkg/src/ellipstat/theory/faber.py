"""Faber polynomials of ``E_rho`` and Faber coefficients by contour quadrature.

``F_j(z) = 2 rho^{j/2} T_j(z / (2 sqrt(rho)))`` for ``j >= 1`` and ``F_0 = 1``; they obey

    F_0 = 1,  F_1 = z,  F_2 = z F_1 - 2 rho F_0,  F_{j+1} = z F_j - rho F_{j-1}  (j >= 2),

and reduce to ``z**j`` at ``rho = 0``.
"""
from __future__ import annotations

import numpy as np

from ..errors import QuadratureError

__all__ = ["faber_eval", "faber_table", "faber_coeffs", "faber_to_power"]


def faber_table(L, z, rho, derivative=False):
    """Values ``F_0..F_L`` at ``z`` (array of shape ``(L+1,) + z.shape``).

    With ``derivative=True`` returns ``(F, F')``.
    """
    z = np.asarray(z, dtype=complex)
    F = np.empty((L + 1,) + z.shape, dtype=complex)
    dF = np.empty_like(F)
    F[0], dF[0] = 1.0, 0.0
    if L >= 1:
        F[1], dF[1] = z, 1.0
    for j in range(1, L):
        c = 2.0 * rho if j == 1 else rho
        F[j + 1] = z * F[j] - c * F[j - 1]
        dF[j + 1] = F[j] + z * dF[j] - c * dF[j - 1]
    return (F, dF) if derivative else F


def faber_eval(j, z, rho):
    if j < 0:
        raise ValueError("Faber index must be >= 0")
    out = faber_table(j, z, rho)[j]
    return complex(out) if out.ndim == 0 else out


def faber_to_power(j, rho):
    """Power-basis coefficients (ascending) of ``F_j``."""
    P = [np.array([1.0]), np.array([0.0, 1.0])]
    for k in range(1, j):
        c = 2.0 * rho if k == 1 else rho
        nxt = np.zeros(k + 2)
        nxt[1:] += P[k]
        nxt[: k] -= c * P[k - 1]
        P.append(nxt)
    return P[j]


def _coeffs_at(f, L, r, rho, K):
    t = 2.0 * np.pi * np.arange(K) / K
    s = r * np.exp(1j * t)
    g = np.asarray(f(rho * s + 1.0 / s), dtype=complex)
    # a_l = (1/2 pi i) oint s^{l-1} f(rho s + 1/s) ds = r^l * mean_k g_k e^{i l t_k}
    return np.fft.ifft(g)[: L + 1] * r ** np.arange(L + 1)


def faber_coeffs(f, L=64, r=0.9, rho=0.0, nodes=None, tol=1e-10, max_nodes=1 << 16):
    """Faber coefficients ``a_0..a_L`` of ``f`` on ``E_rho``.

    Trapezoid rule on ``|s| = r``; the node count doubles until two successive
    results agree to ``tol`` (relative to ``max(1, max|a|)``).
    """
    if not 0.0 < r < 1.0:
        raise ValueError("quadrature radius r must lie in (0, 1)")
    K = 1 << int(np.ceil(np.log2(max(nodes or 256, 4 * (L + 1)))))
    prev = _coeffs_at(f, L, r, rho, K)
    while K < max_nodes:
        K *= 2
        cur = _coeffs_at(f, L, r, rho, K)
        if np.max(np.abs(cur - prev)) <= tol * max(1.0, np.max(np.abs(cur))):
            return cur
        prev = cur
    raise QuadratureError(
        f"Faber coefficients did not converge with {max_nodes} nodes; r = {r} may be too "
        "close to a singularity of f")
