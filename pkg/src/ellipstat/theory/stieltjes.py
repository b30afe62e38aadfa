"""Limiting Stieltjes transform ``m(z)`` of the elliptic law."""
from __future__ import annotations

import numpy as np

from ..errors import DomainError
from .geometry import ellipse_distance

__all__ = ["stieltjes_m", "stieltjes_m_prime"]


def _scalar(out):
    return complex(out) if np.ndim(out) == 0 else out


def stieltjes_m(z, rho, check=True):
    """Root of ``rho*m^2 + z*m + 1 = 0`` with ``|m| < 1``, for ``z`` off ``E_rho``.

    The two roots are ``-2/(z +- s)`` with ``s = sqrt(z^2 - 4 rho)``; the small one
    has the larger denominator, i.e. ``Re(conj(z) s) >= 0``.  This form is
    continuous through ``rho = 0`` where it reduces to ``-1/z``.
    """
    z = np.asarray(z, dtype=complex)
    if check:
        d = ellipse_distance(z, rho)
        if np.any(np.asarray(d) <= 0.0):
            raise DomainError("m(z) is only defined for z strictly outside E_rho")
    if rho == 0:
        return _scalar(-1.0 / z)
    s = np.sqrt(z * z - 4.0 * rho)
    s = np.where((np.conj(z) * s).real >= 0, s, -s)
    return _scalar(-2.0 / (z + s))


def stieltjes_m_prime(z, rho, m=None):
    """``m'(z) = -m / (2 rho m + z)``, from differentiating the quadratic."""
    z = np.asarray(z, dtype=complex)
    if m is None:
        m = stieltjes_m(z, rho)
    m = np.asarray(m, dtype=complex)
    den = 2.0 * rho * m + z
    if np.any(np.abs(den) < 1e-300):
        raise DomainError("2*rho*m + z vanishes: z lies on the branch points of E_rho")
    return _scalar(-m / den)
