"""Monte Carlo experiments: CLT covariance, normality, elliptic law and least singular values.

Every sample draws its matrix from a seed derived from ``(master seed, sample
index)``, and results are reduced in index order, so reports are identical for
any number of worker threads.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import logging
import math

import numpy as np
from scipy import stats as sps

from .atoms import (AtomPairSpec, DiagonalSpec, TruncationPolicy, compute_moments,
                    validate_c0)
from .ensemble import normalize, sample_elliptic
from .errors import (ConfigurationError, DegenerateDataError, DomainError, EllipstatError,
                     ExperimentError)
from .stats import (eigenvalues, linear_stat_eigen, smallest_singular_value,
                    spectral_containment)
from .theory.covariance import (DEFAULT_DELTA, DEFAULT_L, DEFAULT_NODES, DEFAULT_R,
                                covariance_matrix, default_contour)
from .theory.functions import TestFunction
from .theory.geometry import EllipseGeometry, ellipse_distance, offset_points, semi_axes
from .theory.kernels import TheoryMoments

__all__ = ["ExperimentConfig", "CovarianceEstimate", "CovarianceReport", "NormalityRow",
           "NormalityReport", "EsdReport", "LsvReport", "derive_seed", "estimate_covariance",
           "normality_diagnostics", "run_clt_experiment", "run_esd_experiment",
           "run_lsv_experiment", "KINDS"]

log = logging.getLogger(__name__)

KINDS = ("clt", "esd", "lsv")
MAX_DROP_FRACTION = 0.01


def derive_seed(master: int, index: int) -> int:
    """64-bit seed for sample ``index``, from a counter-keyed SeedSequence."""
    state = np.random.SeedSequence(int(master), spawn_key=(int(index),)).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: ensemble, test functions, numerics and Monte Carlo sizes."""

    kind: str = "clt"
    n: int = 100
    samples: int = 100
    seed: int = 0
    pair: AtomPairSpec = field(default_factory=lambda: AtomPairSpec.gaussian(0.0))
    diag: DiagonalSpec = field(default_factory=DiagonalSpec.gaussian)
    truncation: TruncationPolicy = field(default_factory=TruncationPolicy)
    functions: tuple = ()
    theory: TheoryMoments | None = None
    L: int = DEFAULT_L
    r: float = DEFAULT_R
    nodes: int = DEFAULT_NODES
    delta: float = DEFAULT_DELTA
    esd_deltas: tuple = (0.0, 0.01, 0.05, 0.1)
    esd_cells: int = 50
    lsv_levels: int = 10
    lsv_angles: int = 20
    threshold: float = 5.0
    threads: int = 1

    @property
    def rho(self):
        return self.pair.target_rho

    def moments(self) -> TheoryMoments:
        """Theory parameters: the override if given, else the exact atom moments."""
        if self.theory is not None:
            return self.theory
        return TheoryMoments.from_summary(compute_moments(self.pair, self.diag))

    def violations(self):
        out = []
        if self.kind not in KINDS:
            out.append(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.n < 1:
            out.append("n must be >= 1")
        if self.samples < (2 if self.kind == "clt" else 1):
            out.append("covariance estimation needs samples >= 2" if self.kind == "clt"
                       else "samples must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            out.append("seed must be an unsigned 64-bit integer")
        out.extend(validate_c0(self.pair, self.diag, self.truncation).violations)
        if self.kind == "clt":
            if not self.functions:
                out.append("a CLT experiment needs at least one test function")
            for f in self.functions:
                if not f.is_real:
                    out.append(f"{f.label} violates the reality condition; "
                               "split it with split_real_condition first")
        if self.kind == "esd" and abs(self.rho) >= 1.0:
            out.append("the ESD experiment is unsupported for degenerate rho = +-1")
        if not self.delta > 0:
            out.append("delta must be > 0")
        if self.L < 2:
            out.append("series length L must be >= 2")
        if not 0.0 < self.r < 1.0:
            out.append("Faber radius r must lie in (0, 1)")
        if self.nodes < 8:
            out.append("nodes must be >= 8")
        if self.esd_cells < 2:
            out.append("esd_cells must be >= 2")
        if self.lsv_levels < 1 or self.lsv_angles < 1:
            out.append("LSV grid needs at least one level and one angle")
        if not self.threshold > 0:
            out.append("threshold must be > 0")
        if self.threads < 1:
            out.append("threads must be >= 1")
        if self.theory is not None:
            out.extend(f"theory: {v}" for v in self.theory.violations())
        return out

    def validate(self):
        v = self.violations()
        if v:
            raise ConfigurationError("invalid experiment config:\n  " + "\n  ".join(v), v)
        return self

    def to_dict(self):
        return {
            "kind": self.kind,
            "n": self.n,
            "samples": self.samples,
            "seed": self.seed,
            "pair": self.pair.to_dict(),
            "diag": self.diag.to_dict(),
            "truncation": {"enabled": self.truncation.enabled,
                           "epsilon": self.truncation.epsilon_exponent},
            "functions": [f.to_dict() for f in self.functions],
            "theory": self.theory.to_dict() if self.theory is not None else None,
            "numerics": {"L": self.L, "r": self.r, "nodes": self.nodes, "delta": self.delta},
            "esd": {"deltas": list(self.esd_deltas), "cells": self.esd_cells},
            "lsv": {"levels": self.lsv_levels, "angles": self.lsv_angles},
            "threshold": self.threshold,
            "threads": self.threads,
        }

    @classmethod
    def from_dict(cls, d):
        """Build from a plain dict; missing keys take the documented defaults.

        Construction problems are collected and raised together as a
        :class:`ConfigurationError`.
        """
        errors = []

        def part(name, fn, default):
            if name not in d or d[name] is None:
                return default
            try:
                return fn(d[name])
            except (KeyError, TypeError, ValueError) as exc:
                errors.append(f"{name}: {exc}")
                return default

        def fns(items):
            rho = pair.target_rho
            out = []
            for i, item in enumerate(items):
                try:
                    out.append(TestFunction.from_dict(item, rho=rho))
                except (KeyError, TypeError, ValueError) as exc:
                    errors.append(f"functions[{i}]: {exc}")
            return tuple(out)

        def theory(t):
            try:
                return TheoryMoments(float(t["rho"]), float(t["sigma_sq"]), float(t["kappa"]))
            except ConfigurationError as exc:
                errors.extend(f"theory: {v}" for v in exc.violations)
                return None

        def trunc(t):
            return TruncationPolicy(float(t.get("epsilon", 0.1)), bool(t.get("enabled", False)))

        known = {"kind", "n", "samples", "seed", "pair", "diag", "truncation", "functions",
                 "theory", "numerics", "esd", "lsv", "threshold", "threads"}
        errors.extend(f"unknown key {k!r}" for k in d if k not in known)
        pair = part("pair", AtomPairSpec.from_dict, AtomPairSpec.gaussian(0.0))
        num = d.get("numerics") or {}
        esd = d.get("esd") or {}
        lsv = d.get("lsv") or {}
        kw = {}
        for key, conv in (("kind", str), ("n", int), ("samples", int), ("seed", int),
                          ("threshold", float), ("threads", int)):
            if d.get(key) is not None:
                try:
                    kw[key] = conv(d[key])
                except (TypeError, ValueError) as exc:
                    errors.append(f"{key}: {exc}")
        for key, conv in (("L", int), ("r", float), ("nodes", int), ("delta", float)):
            if num.get(key) is not None:
                try:
                    kw[key] = conv(num[key])
                except (TypeError, ValueError) as exc:
                    errors.append(f"numerics.{key}: {exc}")
        try:
            if "deltas" in esd:
                kw["esd_deltas"] = tuple(float(x) for x in esd["deltas"])
            if "cells" in esd:
                kw["esd_cells"] = int(esd["cells"])
            if "levels" in lsv:
                kw["lsv_levels"] = int(lsv["levels"])
            if "angles" in lsv:
                kw["lsv_angles"] = int(lsv["angles"])
        except (TypeError, ValueError) as exc:
            errors.append(f"esd/lsv: {exc}")
        cfg = cls(pair=pair,
                  diag=part("diag", DiagonalSpec.from_dict, DiagonalSpec.gaussian()),
                  truncation=part("truncation", trunc, TruncationPolicy()),
                  functions=part("functions", fns, ()),
                  theory=part("theory", theory, None),
                  **kw)
        if errors:
            raise ConfigurationError("invalid experiment config:\n  " + "\n  ".join(errors),
                                     errors)
        return cfg


# ---------------------------------------------------------------------------
# estimators


@dataclass(frozen=True)
class CovarianceEstimate:
    cov: np.ndarray
    se: np.ndarray
    mean: np.ndarray
    samples: int


def estimate_covariance(values) -> CovarianceEstimate:
    """Unbiased sample covariance with delete-1 jackknife standard errors.

    With ``d_i`` the centred rows and ``S = sum d_i d_i^T``, deleting row ``i``
    gives ``C_(-i) = (S - M/(M-1) d_i d_i^T) / (M-2)``, so the jackknife variance
    has the closed form ``(M-1)/M * sum_i (C_(-i) - mean C_(-.))^2``.
    """
    V = np.asarray(values, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    M = V.shape[0]
    if M < 2:
        raise ValueError("covariance estimation needs at least two samples")
    mean = V.mean(axis=0)
    D = V - mean
    S = D.T @ D
    cov = S / (M - 1)
    if M < 3:
        return CovarianceEstimate(cov, np.full_like(cov, np.nan), mean, M)
    outer = D[:, :, None] * D[:, None, :]
    dev = outer - S / M
    scale = M / ((M - 1.0) * (M - 2.0))
    se = np.sqrt((M - 1.0) / M * scale ** 2 * np.sum(dev * dev, axis=0))
    return CovarianceEstimate(cov, se, mean, M)


@dataclass(frozen=True)
class NormalityRow:
    function_id: str
    skewness: float
    excess_kurtosis: float
    jb_statistic: float
    jb_pvalue: float
    ecdf_max_deviation: float

    def passed(self, max_skew=0.15, max_kurt=0.3, min_p=1e-3):
        return (abs(self.skewness) < max_skew and abs(self.excess_kurtosis) < max_kurt
                and self.jb_pvalue > min_p)

    def to_dict(self):
        return {"function_id": self.function_id, "skewness": self.skewness,
                "excess_kurtosis": self.excess_kurtosis, "jb_statistic": self.jb_statistic,
                "jb_pvalue": self.jb_pvalue, "ecdf_max_deviation": self.ecdf_max_deviation}


@dataclass(frozen=True)
class NormalityReport:
    rows: tuple

    def to_dict(self):
        return {"rows": [r.to_dict() for r in self.rows]}


def normality_diagnostics(column, function_id="") -> NormalityRow:
    """Moment skewness and excess kurtosis, Jarque-Bera test and a KS-type ECDF gap."""
    x = np.asarray(column, dtype=float)
    if x.size < 20:
        raise ValueError("normality diagnostics need at least 20 values")
    x = x - x.mean()
    sd = x.std()
    if not sd > 1e-300 or sd <= 1e-12 * max(1.0, np.abs(column).max()):
        raise DegenerateDataError(f"{function_id or 'column'} has zero variance")
    skew = float(sps.skew(x))
    kurt = float(sps.kurtosis(x, fisher=True))
    jb = sps.jarque_bera(x)
    ks = sps.kstest(x / sd, "norm").statistic
    return NormalityRow(function_id, skew, kurt, float(jb.statistic), float(jb.pvalue),
                        float(ks))


# ---------------------------------------------------------------------------
# CLT experiment


@dataclass(frozen=True)
class CovarianceReport:
    """Empirical versus limiting covariance of the centred statistics."""

    function_ids: tuple
    empirical: np.ndarray
    stderr: np.ndarray
    theory_series: np.ndarray
    theory_contour: np.ndarray
    zscores: np.ndarray
    means: np.ndarray
    moments: TheoryMoments
    samples_used: int
    dropped: int
    dropped_indices: tuple
    containment_flags: int
    values: np.ndarray = field(repr=False, default=None)
    sample_indices: tuple = field(repr=False, default=())
    config: dict = field(repr=False, default_factory=dict)

    @property
    def max_abs_z(self):
        return float(np.max(np.abs(self.zscores)))

    def passed(self, threshold=5.0):
        return self.max_abs_z <= threshold

    def to_dict(self):
        return {
            "function_ids": list(self.function_ids),
            "moments": self.moments.to_dict(),
            "samples_used": self.samples_used,
            "dropped": self.dropped,
            "dropped_indices": list(self.dropped_indices),
            "containment_flags": self.containment_flags,
            "means": self.means.tolist(),
            "empirical": self.empirical.tolist(),
            "stderr": self.stderr.tolist(),
            "theory_series": self.theory_series.tolist(),
            "theory_contour": self.theory_contour.tolist(),
            "zscores": self.zscores.tolist(),
            "max_abs_z": self.max_abs_z,
        }


def zscores(empirical, theory, stderr):
    """``(emp - theory)/se``; a zero SE with exact agreement scores 0."""
    diff = np.asarray(empirical) - np.asarray(theory)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = diff / np.asarray(stderr)
    z = np.where(np.abs(diff) <= 1e-12 * np.maximum(1.0, np.abs(theory)), 0.0, z)
    return np.where(np.isnan(z), np.inf, z)


def _map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def _sample_matrix(cfg, index):
    seed = derive_seed(cfg.seed, index)
    Y = sample_elliptic(cfg.n, cfg.pair, cfg.diag, cfg.truncation, seed=seed)
    return normalize(Y)


def _clt_sample(cfg, geom, index):
    try:
        X = _sample_matrix(cfg, index)
        spec = eigenvalues(X)
        vals = [linear_stat_eigen(f, spec).value for f in cfg.functions]
        outside = bool(np.max(ellipse_distance(spec.eigenvalues, geom)) > geom.delta)
        return index, np.array(vals, dtype=complex), outside, None
    except EllipstatError as exc:
        return index, None, False, f"{type(exc).__name__}: {exc}"


def run_clt_experiment(cfg: ExperimentConfig):
    """Sample ``M`` matrices, evaluate every ``tr f_j`` and compare covariances to the limit.

    Returns ``(CovarianceReport, NormalityReport)``.  Samples whose numerics fail
    are dropped and counted; more than 1% dropped is an :class:`ExperimentError`.
    """
    cfg.validate()
    if cfg.kind != "clt":
        cfg = replace(cfg, kind="clt")
    mom = cfg.moments()
    labels = tuple(f.label for f in cfg.functions)
    # theory first: cheap, and a failure here should not cost a Monte Carlo run
    th_series = covariance_matrix(cfg.functions, mom, "series", L=cfg.L, r=cfg.r)
    contour = default_contour(mom.rho, cfg.delta, cfg.nodes)
    th_contour = covariance_matrix(cfg.functions, mom, "contour", contour=contour)
    geom = EllipseGeometry(cfg.rho, cfg.delta)

    results = _map(lambda i: _clt_sample(cfg, geom, i), range(cfg.samples), cfg.threads)
    kept = [(i, v) for i, v, _, err in results if err is None]
    dropped = tuple(i for i, _, _, err in results if err is not None)
    for i, _, _, err in results:
        if err is not None:
            log.warning("sample %d dropped: %s", i, err)
    if len(dropped) > MAX_DROP_FRACTION * cfg.samples:
        raise ExperimentError(f"{len(dropped)} of {cfg.samples} samples failed (> 1%)")
    flags = sum(1 for _, v, out, err in results if err is None and out)
    values = np.array([v for _, v in kept], dtype=complex).reshape(len(kept), len(labels))
    n = cfg.n
    if np.any(np.abs(values.imag) > 1e-8 * n):
        raise ExperimentError("a statistic has a non-negligible imaginary part")
    est = estimate_covariance(values.real)
    z = zscores(est.cov, th_series, est.se)
    cov_report = CovarianceReport(labels, est.cov, est.se, th_series, th_contour, z, est.mean,
                                  mom, len(kept), len(dropped), dropped, flags, values,
                                  tuple(i for i, _ in kept), cfg.to_dict())
    rows = []
    for j, lab in enumerate(labels):
        try:
            rows.append(normality_diagnostics(values[:, j].real, lab))
        except (DegenerateDataError, ValueError) as exc:
            log.warning("normality diagnostics skipped for %s: %s", lab, exc)
            rows.append(NormalityRow(lab, math.nan, math.nan, math.nan, math.nan, math.nan))
    return cov_report, NormalityReport(tuple(rows))


# ---------------------------------------------------------------------------
# elliptic law


@dataclass(frozen=True)
class EsdReport:
    rho: float
    n: int
    samples: int
    containment: dict
    max_distance: float
    eigen_mean: complex
    mean_tolerance: float
    chi2: float
    dof: int
    pvalue: float
    cell_size: float
    cell_counts: tuple
    eigenvalues: np.ndarray = field(repr=False, default=None)

    @property
    def mean_ok(self):
        return abs(self.eigen_mean) <= self.mean_tolerance

    def to_dict(self):
        return {"rho": self.rho, "n": self.n, "samples": self.samples,
                "containment": {format(k, "g"): v for k, v in self.containment.items()},
                "max_distance": self.max_distance,
                "eigen_mean": [self.eigen_mean.real, self.eigen_mean.imag],
                "mean_tolerance": self.mean_tolerance, "chi2": self.chi2, "dof": self.dof,
                "pvalue": self.pvalue, "cell_size": self.cell_size,
                "cell_counts": list(self.cell_counts)}


def interior_cells(rho, cells, margin=0.1, floor=0.1):
    """Square cells in the upper half of ``E_rho`` away from its edge and the real axis.

    Returns ``(h, x0, y0)`` where ``x0, y0`` are the lower-left corners of the
    ``cells`` qualifying cells nearest the origin.  The cell side ``h`` shrinks
    geometrically until enough cells fit.
    """
    a, b = semi_axes(rho)
    ai, bi = a - margin, b - margin
    if ai <= 0 or bi <= floor:
        raise DomainError(f"E_rho is too thin at rho = {rho} for an interior cell test")
    h = 0.25
    while h > 1e-3:
        nx = int(math.ceil(ai / h)) + 1
        kx = np.arange(-nx, nx)
        ky = np.arange(int(math.ceil(bi / h)) + 1)
        X0, Y0 = np.meshgrid(kx * h, floor + ky * h, indexing="ij")
        X0, Y0 = X0.ravel(), Y0.ravel()
        ok = np.ones(X0.shape, dtype=bool)
        for dx in (0.0, h):
            for dy in (0.0, h):
                ok &= ((X0 + dx) / ai) ** 2 + ((Y0 + dy) / bi) ** 2 <= 1.0
        if ok.sum() >= cells:
            X0, Y0 = X0[ok], Y0[ok]
            cx, cy = X0 + h / 2, Y0 + h / 2
            order = np.lexsort((cx, cy, np.round(np.hypot(cx, cy), 12)))[:cells]
            return h, X0[order], Y0[order]
        h *= 0.9
    raise DomainError("could not fit the requested number of interior cells")


def cell_chi2(eigs, rho, cells=50):
    """Chi-squared of upper-half eigenvalue counts in equal-area interior cells.

    Conditional on the total falling in the chosen cells the uniform law makes
    the counts multinomial with equal probabilities.
    """
    h, x0, y0 = interior_cells(rho, cells)
    lam = np.asarray(eigs, dtype=complex)
    lam = lam[lam.imag > 0]
    x, y = lam.real[:, None], lam.imag[:, None]
    inside = (x >= x0) & (x < x0 + h) & (y >= y0) & (y < y0 + h)
    counts = inside.sum(axis=0)
    total = counts.sum()
    if total == 0:
        raise DegenerateDataError("no eigenvalues fell in the interior cells")
    expected = total / cells
    chi2 = float(np.sum((counts - expected) ** 2) / expected)
    dof = cells - 1
    return chi2, dof, float(sps.chi2.sf(chi2, dof)), h, counts


def run_esd_experiment(cfg: ExperimentConfig) -> EsdReport:
    """Pool eigenvalues over samples; containment per delta and interior uniformity."""
    cfg.validate()
    if abs(cfg.rho) >= 1.0:
        raise DomainError("the ESD experiment is unsupported for degenerate rho = +-1")
    lam = _map(lambda i: eigenvalues(_sample_matrix(cfg, i)).eigenvalues,
               range(cfg.samples), cfg.threads)
    pooled = np.concatenate(lam)
    geom = EllipseGeometry(cfg.rho)
    cont = spectral_containment(pooled, geom, cfg.esd_deltas)
    chi2, dof, p, h, counts = cell_chi2(pooled, cfg.rho, cfg.esd_cells)
    mean = complex(pooled.mean())
    return EsdReport(cfg.rho, cfg.n, cfg.samples, dict(zip(cont.deltas, cont.fractions)),
                     cont.max_distance, mean, 5.0 / math.sqrt(pooled.size), chi2, dof, p, h,
                     tuple(int(c) for c in counts), pooled)


# ---------------------------------------------------------------------------
# least singular value sweep


@dataclass(frozen=True)
class LsvReport:
    rho: float
    n: int
    delta: float
    grid: np.ndarray = field(repr=False)
    grid_distance: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    trial_minima: np.ndarray = field(repr=False)
    eig_sigma_max: float = 0.0

    @property
    def overall_min(self):
        return float(self.trial_minima.min())

    def min_at_distance(self, delta):
        """Minimum of ``sigma_n`` over grid points at distance ``>= delta``."""
        mask = self.grid_distance >= delta - 1e-12
        return float(self.sigma[:, mask].min()) if mask.any() else math.inf

    def to_dict(self):
        return {"rho": self.rho, "n": self.n, "delta": self.delta,
                "grid_points": int(self.grid.size), "trials": int(self.trial_minima.size),
                "trial_minima": self.trial_minima.tolist(), "overall_min": self.overall_min,
                "eig_sigma_max": self.eig_sigma_max}


def lsv_grid(rho, delta, levels=10, angles=20):
    """Points at distances ``linspace(delta, delta+2, levels)`` along outward normals."""
    dist = np.linspace(delta, delta + 2.0, levels)
    theta = 2.0 * np.pi * np.arange(angles) / angles
    D, T = np.meshgrid(dist, theta, indexing="ij")
    return offset_points(rho, D.ravel(), T.ravel()), D.ravel()


def _lsv_trial(cfg, grid, index):
    X = _sample_matrix(cfg, index)
    A = X.entries
    sig = np.array([smallest_singular_value(A, z) for z in grid])
    lam = eigenvalues(X).eigenvalues
    # spot-check sigma_n at a few eigenvalues: extreme real part, extreme modulus
    picks = {int(np.argmax(lam.real)), int(np.argmax(np.abs(lam))), int(np.argmax(lam.imag))}
    eig_sig = max(smallest_singular_value(A, lam[k]) for k in sorted(picks))
    return sig, eig_sig


def run_lsv_experiment(cfg: ExperimentConfig) -> LsvReport:
    """``min_z sigma_n(X - zI)`` over a band of points at distance ``[delta, delta+2]``."""
    cfg.validate()
    grid, dist = lsv_grid(cfg.rho, cfg.delta, cfg.lsv_levels, cfg.lsv_angles)
    out = _map(lambda i: _lsv_trial(cfg, grid, i), range(cfg.samples), cfg.threads)
    sigma = np.array([s for s, _ in out])
    return LsvReport(cfg.rho, cfg.n, cfg.delta, grid, dist, sigma, sigma.min(axis=1),
                     float(max(e for _, e in out)))
