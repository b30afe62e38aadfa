"""Covariance kernels ``beta(z, w)`` and ``upsilon(z, w)`` of the limiting Gaussian field.

Both depend on ``z, w`` only through ``u = m(z) m(w)``.  Writing

    Phi(u) = u * beta = (s2 - rho - 1) u - log(1 - rho u) - log(1 - u) + (c/2) u^2,

with ``c = kappa - 2 rho^2 - 1``, the mixed derivative is

    upsilon = d^2/dz dw Phi(m(z) m(w)) = m'(z) m'(w) (Phi'(u) + u Phi''(u)).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DomainError
from .stieltjes import stieltjes_m, stieltjes_m_prime

__all__ = ["TheoryMoments", "beta", "beta_u", "upsilon", "upsilon_u", "phi", "phi_prime",
           "phi_double_prime"]

_SERIES_RADIUS = 1e-4
_SERIES_TERMS = 8


@dataclass(frozen=True)
class TheoryMoments:
    """``(rho, sigma^2, kappa)``: everything the limiting formulas need."""

    rho: float
    sigma_sq: float
    kappa: float

    def __post_init__(self):
        v = self.violations()
        if v:
            raise ConfigurationError("invalid theory moments: " + "; ".join(v), v)

    def violations(self):
        out = []
        if not abs(self.rho) <= 1.0:
            out.append(f"|rho| = {abs(self.rho):g} exceeds 1 (Cauchy-Schwarz bound)")
        if not self.sigma_sq >= 0:
            out.append("sigma_sq must be non-negative")
        if not self.kappa >= self.rho ** 2 - 1e-12:
            out.append(f"kappa = {self.kappa:g} < rho^2 violates Cauchy-Schwarz")
        return out

    @property
    def fourth_cross(self):
        """``kappa - 2 rho^2 - 1``; zero for every Gaussian pair."""
        return self.kappa - 2.0 * self.rho ** 2 - 1.0

    @classmethod
    def from_summary(cls, summary):
        return cls(summary.rho, summary.sigma_sq, summary.kappa)

    @classmethod
    def gaussian(cls, rho, sigma_sq=None):
        return cls(rho, 1.0 + rho if sigma_sq is None else sigma_sq, 1.0 + 2.0 * rho * rho)

    def to_dict(self):
        return {"rho": self.rho, "sigma_sq": self.sigma_sq, "kappa": self.kappa}


def _log_ratio(u, rho):
    """``-log(1 - rho u)/u - log(1 - u)/u`` with the removable singularity at 0."""
    u = np.asarray(u, dtype=complex)
    small = np.abs(u) < _SERIES_RADIUS
    safe = np.where(small, 0.5, u)
    if np.any((1.0 - safe).real <= 0) or np.any((1.0 - rho * safe).real <= 0):
        raise DomainError("principal logarithm left the right half-plane (|m(z) m(w)| >= 1)")
    direct = -(np.log1p(-rho * safe) + np.log1p(-safe)) / safe
    series = np.zeros_like(u)
    for k in range(_SERIES_TERMS, 0, -1):
        series = series * u + (1.0 + rho ** k) / k
    return np.where(small, series, direct)


def beta_u(u, mom: TheoryMoments):
    return (mom.sigma_sq - mom.rho - 1.0) + _log_ratio(u, mom.rho) + 0.5 * mom.fourth_cross * u


def phi(u, mom):
    return np.asarray(u) * beta_u(u, mom)


def phi_prime(u, mom):
    rho = mom.rho
    return (mom.sigma_sq - rho - 1.0) + rho / (1.0 - rho * u) + 1.0 / (1.0 - u) + mom.fourth_cross * u


def phi_double_prime(u, mom):
    rho = mom.rho
    return rho * rho / (1.0 - rho * u) ** 2 + 1.0 / (1.0 - u) ** 2 + mom.fourth_cross


def upsilon_u(u, mom):
    """``Phi'(u) + u Phi''(u)``, the factor multiplying ``m'(z) m'(w)``."""
    return phi_prime(u, mom) + u * phi_double_prime(u, mom)


def _out(x):
    return complex(x) if np.ndim(x) == 0 else x


def beta(z, w, mom: TheoryMoments):
    """``beta(z, w)``; ``z`` and ``w`` broadcast against each other."""
    u = np.asarray(stieltjes_m(z, mom.rho)) * np.asarray(stieltjes_m(w, mom.rho))
    return _out(beta_u(u, mom))


def upsilon(z, w, mom: TheoryMoments):
    """Closed form of ``d^2/dz dw [m(z) m(w) beta(z, w)]``."""
    mz, mw = np.asarray(stieltjes_m(z, mom.rho)), np.asarray(stieltjes_m(w, mom.rho))
    dmz = np.asarray(stieltjes_m_prime(z, mom.rho, mz))
    dmw = np.asarray(stieltjes_m_prime(w, mom.rho, mw))
    return _out(dmz * dmw * upsilon_u(mz * mw, mom))
