"""Per-matrix spectral computations.

Linear statistics ``tr f(X)`` can be evaluated three ways that share no code:
from the eigenvalues, from a Faber expansion via the matrix three-term
recurrence, and from a contour integral of the resolvent trace.  The first is
the default; the other two are cross-checks.
"""
from __future__ import annotations

from dataclasses import dataclass
import enum
import math

import numpy as np
from scipy import linalg

from .ensemble import EllipticMatrix
from .errors import ConditioningError, DomainError, EnsembleStateError, NumericError
from .theory.geometry import ContourSpec, EllipseGeometry, ellipse_distance
from .theory.functions import TestFunction

__all__ = ["Route", "SpectrumResult", "LinearStatistic", "ContainmentReport", "eigenvalues",
           "linear_stat_eigen", "linear_stat_faber", "linear_stat_resolvent",
           "smallest_singular_value", "spectral_containment", "norm_bound", "SVD_MAX_N"]

SVD_MAX_N = 1500
IMAG_CLEANUP = 1e-10
PROXIMITY = 1e-6


class Route(str, enum.Enum):
    EIGEN = "eigen"
    FABER = "faber_recurrence"
    RESOLVENT = "resolvent_contour"


@dataclass(frozen=True)
class SpectrumResult:
    """Eigenvalues of one matrix plus provenance.

    ``residual_bound`` is the backward-error scale ``n * eps * ||X||`` of the
    dense QR algorithm; ``trace_residual`` is ``|sum(lambda) - tr X|``.
    """

    eigenvalues: np.ndarray
    backend: str
    residual_bound: float
    trace_residual: float
    norm: float
    seed: int | None = None

    @property
    def n(self):
        return len(self.eigenvalues)


@dataclass(frozen=True)
class LinearStatistic:
    value: complex
    function_id: str
    route: Route
    centered: bool = False

    @property
    def real(self):
        return self.value.real


@dataclass(frozen=True)
class ContainmentReport:
    rho: float
    deltas: tuple
    fractions: tuple
    max_distance: float
    count: int

    def fraction(self, delta):
        return self.fractions[self.deltas.index(delta)]

    def to_dict(self):
        return {"rho": self.rho, "deltas": list(self.deltas), "fractions": list(self.fractions),
                "max_distance": self.max_distance, "count": self.count}


def _matrix(X):
    """Dense array and seed from an :class:`EllipticMatrix` or a bare array."""
    if isinstance(X, EllipticMatrix):
        return np.asarray(X.entries), X.seed
    A = np.asarray(X)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    return A, None


def norm_bound(A):
    """Cheap upper bound ``sqrt(||A||_1 ||A||_inf)`` on the spectral norm."""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return math.sqrt(np.abs(A).sum(axis=0).max() * np.abs(A).sum(axis=1).max())


def eigenvalues(X) -> SpectrumResult:
    """All eigenvalues of a normalised matrix by LAPACK ``geev``.

    Imaginary parts below ``1e-10 * ||X||`` are zeroed so that real eigenvalues
    come out exactly real and pairs stay conjugate.
    """
    if isinstance(X, EllipticMatrix) and not X.normalized:
        raise EnsembleStateError("eigenvalues expects a normalized matrix; call normalize() first")
    A, seed = _matrix(X)
    try:
        lam = linalg.eigvals(A, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"eigensolver failed: {exc}", seed=seed) from exc
    nrm = norm_bound(A)
    lam = np.asarray(lam, dtype=complex)
    if np.isrealobj(A):
        lam = np.where(np.abs(lam.imag) < IMAG_CLEANUP * max(nrm, 1e-300), lam.real + 0j, lam)
    n = A.shape[0]
    resid = abs(np.sum(lam) - np.trace(A))
    if resid > 1e-8 * max(n, 1):
        raise NumericError(f"trace identity violated by {resid:.3g}", seed=seed)
    return SpectrumResult(lam, "lapack-geev", n * np.finfo(float).eps * nrm, float(resid), nrm,
                          seed)


def _spectrum_array(spec):
    return spec.eigenvalues if isinstance(spec, SpectrumResult) else np.asarray(spec, complex)


def linear_stat_eigen(f: TestFunction, spec) -> LinearStatistic:
    """``sum_i f(lambda_i)``."""
    lam = _spectrum_array(spec)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.asarray(f(lam))
    if not np.all(np.isfinite(vals)):
        raise DomainError(f"{f.label} is not finite at some eigenvalue")
    return LinearStatistic(complex(np.sum(vals)), f.label, Route.EIGEN)


def linear_stat_faber(coeffs, X, rho, function_id="faber") -> LinearStatistic:
    """``sum_l a_l tr F_l(X)`` with ``F_l(X)`` built by the matrix recurrence."""
    a = np.asarray(coeffs, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ValueError("Faber coefficients must be finite")
    A, _ = _matrix(X)
    n = A.shape[0]
    nz = np.nonzero(a)[0]
    L = int(nz[-1]) if nz.size else 0
    total = a[0] * n
    if L >= 1:
        prev, cur = np.eye(n), A.copy()
        total += a[1] * np.trace(cur)
        for l in range(1, L):
            c = 2.0 * rho if l == 1 else rho
            prev, cur = cur, A @ cur - c * prev
            total += a[l + 1] * np.trace(cur)
    return LinearStatistic(complex(total), function_id, Route.FABER)


def _resolvent_traces(A, z, chunk=16):
    """``tr (A - z_k I)^{-1}`` and a lower bound on ``sigma_min(A - z_k I)``."""
    n = A.shape[0]
    eye = np.eye(n)
    tr = np.empty(len(z), dtype=complex)
    smin = np.empty(len(z))
    for s in range(0, len(z), chunk):
        zz = z[s:s + chunk]
        try:
            R = np.linalg.inv(A[None, :, :] - zz[:, None, None] * eye)
        except np.linalg.LinAlgError:
            # a node sits exactly on an eigenvalue
            tr[s:s + chunk] = np.nan
            smin[s:s + chunk] = 0.0
            continue
        tr[s:s + chunk] = np.trace(R, axis1=1, axis2=2)
        smin[s:s + chunk] = 1.0 / np.linalg.norm(R, axis=(1, 2))  # ||R||_F >= ||R||_2
    return tr, smin


def _contour_sum(f, A, contour, K, nrm):
    z, w = contour.points(K)
    tr, smin = _resolvent_traces(A, z)
    if np.any(smin < PROXIMITY * max(nrm, 1.0)):
        raise ConditioningError("contour node within 1e-6 ||X|| of the spectrum")
    return -np.sum(np.asarray(f(z)) * tr * w) / (2j * np.pi)


def linear_stat_resolvent(f: TestFunction, X, contour: ContourSpec | None = None, nodes=64,
                          tol=1e-10, max_nodes=2048, retries=4) -> LinearStatistic:
    """``-1/(2 pi i) oint f(z) tr (X - zI)^{-1} dz`` by the trapezoid rule.

    Without an explicit contour a circle of radius ``1.05 ||X||_2 + 0.05`` is
    used, which encloses the whole spectrum.  Nodes double until two results
    agree to ``tol``.  If a node comes within ``1e-6 ||X||`` of the spectrum the
    default circle is enlarged by 10% and the sum restarted; with a
    user-supplied contour a :class:`ConditioningError` is raised instead.
    """
    A, seed = _matrix(X)
    nrm = float(linalg.norm(A, 2)) if A.size else 0.0
    auto = contour is None
    radius = 1.05 * nrm + 0.05
    for attempt in range(retries + 1):
        if auto:
            contour = ContourSpec.circle(radius, nodes)
        try:
            K = contour.nodes if not auto else nodes
            prev = _contour_sum(f, A, contour, K, nrm)
            while True:
                if 2 * K > max_nodes:
                    raise NumericError("resolvent quadrature did not converge", seed=seed)
                K *= 2
                cur = _contour_sum(f, A, contour, K, nrm)
                if abs(cur - prev) <= tol * max(1.0, abs(cur)):
                    return LinearStatistic(complex(cur), f.label, Route.RESOLVENT)
                prev = cur
        except ConditioningError as exc:
            if not auto or attempt == retries:
                exc.seed = seed
                raise
            radius *= 1.1
    raise AssertionError("unreachable")


def _sigma_min_inverse_iteration(B, tol=1e-12, max_iter=500, seed=None):
    """``sigma_min(B)`` from power iteration on ``(B^H B)^{-1}`` using one LU of ``B``."""
    try:
        lu = linalg.lu_factor(B, check_finite=False)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"LU failed: {exc}", seed=seed) from exc
    if np.any(np.diag(lu[0]) == 0):
        return 0.0
    rng = np.random.default_rng(0)
    x = rng.standard_normal(B.shape[0]) + 0j
    x /= np.linalg.norm(x)
    lam_old = 0.0
    for _ in range(max_iter):
        y = linalg.lu_solve(lu, x, trans=2, check_finite=False)   # B^H y = x
        y = linalg.lu_solve(lu, y, trans=0, check_finite=False)   # B v = y
        lam = np.linalg.norm(y)
        if not np.isfinite(lam):
            return 0.0
        x = y / lam
        if abs(lam - lam_old) <= tol * lam:
            return float(1.0 / math.sqrt(lam))
        lam_old = lam
    raise NumericError("inverse iteration did not converge", seed=seed)


def smallest_singular_value(X, z, svd_max_n=SVD_MAX_N) -> float:
    """``sigma_n(X - zI)``: full SVD for ``n <= svd_max_n``, inverse iteration above."""
    A, seed = _matrix(X)
    n = A.shape[0]
    z = complex(z)
    B = A - (z.real if z.imag == 0 else z) * np.eye(n)
    if n <= svd_max_n:
        try:
            return float(linalg.svdvals(B, check_finite=False)[-1])
        except (linalg.LinAlgError, ValueError) as exc:
            raise NumericError(f"SVD failed: {exc}", seed=seed) from exc
    return _sigma_min_inverse_iteration(B.astype(complex), seed=seed)


def spectral_containment(spec, geom, deltas=(0.0, 0.01, 0.05, 0.1)) -> ContainmentReport:
    """Fraction of eigenvalues inside ``E_{rho, delta}`` for each ``delta``."""
    lam = _spectrum_array(spec)
    if not isinstance(geom, EllipseGeometry):
        geom = EllipseGeometry(float(geom))
    d = np.atleast_1d(ellipse_distance(lam, geom))
    deltas = tuple(float(x) for x in deltas)
    if d.size == 0:
        return ContainmentReport(geom.rho, deltas, tuple(1.0 for _ in deltas), 0.0, 0)
    fr = tuple(float(np.mean(d <= x)) for x in deltas)
    return ContainmentReport(geom.rho, deltas, fr, float(d.max()), int(d.size))
