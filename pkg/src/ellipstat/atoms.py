"""Atom variables of a real elliptic random matrix.

An elliptic matrix is built from iid copies of a correlated off-diagonal pair
``(xi1, xi2)`` and an independent diagonal variable ``zeta``.  This module
describes those laws, samples them, reports their exact moments and applies
the entrywise truncation/standardisation used to pass to bounded entries.

Every built-in law is either Gaussian or has finite discrete support, so all
population moments (including truncated ones) are exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate, special, stats

from .errors import ConfigurationError, DegenerateTruncationError

__all__ = [
    "AtomPairSpec",
    "DiagonalSpec",
    "TruncationPolicy",
    "MomentSummary",
    "TruncatedMoments",
    "C0Report",
    "sample_pair",
    "sample_pairs",
    "sample_diag",
    "sample_diags",
    "truncation_stats",
    "truncate_standardize",
    "truncated_correlation",
    "compute_moments",
    "validate_c0",
]

PAIR_KINDS = ("gaussian", "linear_mix", "rademacher", "custom")
DIAG_KINDS = ("gaussian", "rademacher", "zero", "custom")
MIX_BASES = {"gaussian": 3.0, "rademacher": 1.0}  # base law -> fourth moment

_TOL = 1e-9


# ---------------------------------------------------------------------------
# descriptors


@dataclass(frozen=True)
class AtomPairSpec:
    """Law of the off-diagonal pair ``(xi1, xi2)``.

    Use the constructors rather than the raw initialiser:

    * ``AtomPairSpec.gaussian(rho)``: standard bivariate normal.
    * ``AtomPairSpec.linear_mix(rho, base)``: ``xi2 = rho*xi1 + sqrt(1-rho^2)*xi1'``
      with ``xi1, xi1'`` iid from ``base`` (``"gaussian"`` or ``"rademacher"``).
    * ``AtomPairSpec.rademacher(rho)``: ``xi1 = +-1`` and ``xi2 = +-xi1``, the sign
      kept with probability ``p = (1 + rho)/2``.
    * ``AtomPairSpec.custom(points, probs)``: finite discrete bivariate law.
    """

    kind: str
    target_rho: float
    base: str = "gaussian"
    points: tuple = ()
    probs: tuple = ()

    @classmethod
    def gaussian(cls, rho):
        return cls("gaussian", float(rho))

    @classmethod
    def linear_mix(cls, rho, base="gaussian"):
        return cls("linear_mix", float(rho), base=base)

    @classmethod
    def rademacher(cls, rho):
        return cls("rademacher", float(rho))

    @classmethod
    def from_coupling(cls, p):
        """Rademacher pair parametrised by the sign-coupling probability ``p``."""
        return cls("rademacher", 2.0 * float(p) - 1.0)

    @classmethod
    def custom(cls, points, probs):
        pts = tuple((float(a), float(b)) for a, b in points)
        pr = tuple(float(p) for p in probs)
        arr = np.asarray(pts, dtype=float).reshape(-1, 2)
        rho = float(np.dot(pr, arr[:, 0] * arr[:, 1])) if pts else 0.0
        return cls("custom", rho, points=pts, probs=pr)

    @property
    def coupling_probability(self):
        return 0.5 * (1.0 + self.target_rho)

    def violations(self):
        out = []
        if self.kind not in PAIR_KINDS:
            return [f"unknown pair kind {self.kind!r}"]
        if not np.isfinite(self.target_rho) or abs(self.target_rho) > 1.0 + 1e-12:
            out.append(f"|rho| = {abs(self.target_rho):g} exceeds 1 (Cauchy-Schwarz bound)")
        if self.kind == "linear_mix" and self.base not in MIX_BASES:
            out.append(f"unknown linear_mix base {self.base!r}")
        if self.kind == "custom":
            out.extend(_table_violations(np.asarray(self.points, float).reshape(-1, 2),
                                         np.asarray(self.probs, float), pair=True))
        return out

    def to_dict(self):
        d = {"kind": self.kind, "rho": self.target_rho}
        if self.kind == "linear_mix":
            d["base"] = self.base
        if self.kind == "custom":
            d = {"kind": "custom", "points": [list(p) for p in self.points],
                 "probs": list(self.probs)}
        return d

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind", "gaussian")
        if kind == "custom":
            return cls.custom(d["points"], d["probs"])
        if kind == "linear_mix":
            return cls.linear_mix(d.get("rho", 0.0), d.get("base", "gaussian"))
        if kind == "rademacher" and "p" in d:
            return cls.from_coupling(d["p"])
        return cls(kind, float(d.get("rho", 0.0)))


@dataclass(frozen=True)
class DiagonalSpec:
    """Law of the diagonal variable ``zeta`` (mean zero, variance ``sigma_sq``)."""

    kind: str
    scale: float = 1.0
    values: tuple = ()
    probs: tuple = ()

    @classmethod
    def gaussian(cls, variance=1.0):
        return cls("gaussian", math.sqrt(float(variance)))

    @classmethod
    def rademacher(cls, scale=1.0):
        return cls("rademacher", float(scale))

    @classmethod
    def zero(cls):
        return cls("zero", 0.0)

    @classmethod
    def custom(cls, values, probs):
        return cls("custom", 0.0, tuple(float(v) for v in values), tuple(float(p) for p in probs))

    @property
    def sigma_sq(self):
        if self.kind == "custom":
            v, p = np.asarray(self.values), np.asarray(self.probs)
            return float(np.dot(p, v * v) - np.dot(p, v) ** 2)
        if self.kind == "zero":
            return 0.0
        return self.scale ** 2

    def violations(self):
        if self.kind not in DIAG_KINDS:
            return [f"unknown diagonal kind {self.kind!r}"]
        out = []
        if self.kind in ("gaussian", "rademacher") and not (np.isfinite(self.scale) and self.scale >= 0):
            out.append("diagonal scale must be finite and non-negative")
        if self.kind == "custom":
            out.extend(_table_violations(np.asarray(self.values, float).reshape(-1, 1),
                                         np.asarray(self.probs, float), pair=False))
        return out

    def to_dict(self):
        if self.kind == "gaussian":
            return {"kind": "gaussian", "variance": self.scale ** 2}
        if self.kind == "rademacher":
            return {"kind": "rademacher", "scale": self.scale}
        if self.kind == "zero":
            return {"kind": "zero"}
        return {"kind": "custom", "values": list(self.values), "probs": list(self.probs)}

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind", "gaussian")
        if kind == "gaussian":
            return cls.gaussian(d.get("variance", 1.0))
        if kind == "rademacher":
            return cls.rademacher(d.get("scale", 1.0))
        if kind == "zero":
            return cls.zero()
        if kind == "custom":
            return cls.custom(d["values"], d["probs"])
        return cls(kind)


@dataclass(frozen=True)
class TruncationPolicy:
    """Entrywise cutoff at ``eps_N * sqrt(N)`` with ``eps_N = N**(-epsilon_exponent)``."""

    epsilon_exponent: float = 0.1
    enabled: bool = False

    def cutoff(self, n):
        return float(n) ** (0.5 - self.epsilon_exponent)

    def violations(self):
        if not self.epsilon_exponent > 0:
            return ["truncation exponent epsilon must be > 0"]
        if self.epsilon_exponent >= 0.5:
            return ["truncation exponent epsilon must be < 1/2 so the cutoff N^(1/2-eps) grows"]
        return []


@dataclass(frozen=True)
class MomentSummary:
    rho: float
    sigma_sq: float
    kappa: float
    higher: dict = field(default_factory=dict)
    kappa_stderr: float = 0.0


@dataclass(frozen=True)
class TruncatedMoments:
    """Population moments of ``x * 1{|x| <= cutoff}`` and the target standard deviation."""

    cutoff: float
    mean: float
    var: float
    target_sd: float = 1.0


@dataclass
class C0Report:
    violations: list = field(default_factory=list)
    checked: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations

    def __bool__(self):
        return self.passed


def _table_violations(points, probs, pair):
    out = []
    if points.shape[0] == 0 or points.shape[0] != probs.shape[0]:
        return ["custom table needs one probability per support point"]
    if not np.all(np.isfinite(points)):
        out.append("custom table has non-finite support points")
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
        out.append("custom probabilities must be non-negative and sum to 1")
        return out
    means = probs @ points
    if np.any(np.abs(means) > _TOL):
        out.append(f"nonzero mean {means.tolist()}")
    if pair:
        var = probs @ (points ** 2) - means ** 2
        if np.any(np.abs(var - 1.0) > _TOL):
            out.append(f"non-unit variance {var.tolist()}")
    return out


def _require_valid(spec):
    v = spec.violations()
    if v:
        raise ConfigurationError(f"invalid {type(spec).__name__}: " + "; ".join(v), v)


# ---------------------------------------------------------------------------
# sampling


def sample_pairs(spec: AtomPairSpec, rng: np.random.Generator, size: int):
    """Draw ``size`` iid copies of ``(xi1, xi2)``; returns two float arrays."""
    _require_valid(spec)
    rho = spec.target_rho
    if spec.kind == "rademacher":
        x1 = rng.choice((-1.0, 1.0), size=size)
        keep = rng.random(size) < spec.coupling_probability
        return x1, np.where(keep, x1, -x1)
    if spec.kind == "custom":
        pts = np.asarray(spec.points, float)
        idx = rng.choice(len(pts), size=size, p=np.asarray(spec.probs))
        return pts[idx, 0].copy(), pts[idx, 1].copy()
    if spec.kind == "linear_mix" and spec.base == "rademacher":
        a = rng.choice((-1.0, 1.0), size=size)
        b = rng.choice((-1.0, 1.0), size=size)
    else:
        a = rng.standard_normal(size)
        b = rng.standard_normal(size)
    s = math.sqrt(max(0.0, 1.0 - rho * rho))
    return a, rho * a + s * b


def sample_pair(spec: AtomPairSpec, rng: np.random.Generator):
    x1, x2 = sample_pairs(spec, rng, 1)
    return float(x1[0]), float(x2[0])


def sample_diags(spec: DiagonalSpec, rng: np.random.Generator, size: int):
    _require_valid(spec)
    if spec.kind == "zero":
        return np.zeros(size)
    if spec.kind == "gaussian":
        return spec.scale * rng.standard_normal(size)
    if spec.kind == "rademacher":
        return spec.scale * rng.choice((-1.0, 1.0), size=size)
    return np.asarray(spec.values)[rng.choice(len(spec.values), size=size, p=np.asarray(spec.probs))]


def sample_diag(spec: DiagonalSpec, rng: np.random.Generator):
    return float(sample_diags(spec, rng, 1)[0])


# ---------------------------------------------------------------------------
# marginals: each is ("normal", sd) or ("discrete", values, probs)


def _pair_marginals(spec):
    if spec.kind in ("gaussian",) or (spec.kind == "linear_mix" and spec.base == "gaussian"):
        return ("normal", 1.0), ("normal", 1.0)
    if spec.kind == "rademacher":
        m = ("discrete", np.array([-1.0, 1.0]), np.array([0.5, 0.5]))
        return m, m
    if spec.kind == "linear_mix":
        rho = spec.target_rho
        s = math.sqrt(max(0.0, 1.0 - rho * rho))
        vals = np.array([rho + s, rho - s, -rho + s, -rho - s])
        return ("discrete", np.array([-1.0, 1.0]), np.array([0.5, 0.5])), \
               ("discrete", vals, np.full(4, 0.25))
    pts = np.asarray(spec.points, float)
    p = np.asarray(spec.probs, float)
    return ("discrete", pts[:, 0], p), ("discrete", pts[:, 1], p)


def _diag_marginal(spec):
    if spec.kind == "gaussian":
        return ("normal", spec.scale)
    if spec.kind == "rademacher":
        return ("discrete", np.array([-spec.scale, spec.scale]), np.array([0.5, 0.5]))
    if spec.kind == "zero":
        return ("discrete", np.array([0.0]), np.array([1.0]))
    return ("discrete", np.asarray(spec.values, float), np.asarray(spec.probs, float))


def _abs_moment(marg, order):
    if marg[0] == "normal":
        sd = marg[1]
        return sd ** order * 2 ** (order / 2) * special.gamma((order + 1) / 2) / math.sqrt(math.pi)
    _, v, p = marg
    return float(np.dot(p, np.abs(v) ** order))


def _truncated_raw(marg, c):
    """(E[x 1{|x|<=c}], E[x^2 1{|x|<=c}]) for one marginal."""
    if marg[0] == "normal":
        sd = marg[1]
        if sd == 0:
            return 0.0, 0.0
        t = c / sd
        # E[Z^2; |Z|<=t] = erf(t/sqrt2) - 2 t phi(t)
        m2 = special.erf(t / math.sqrt(2)) - 2.0 * t * stats.norm.pdf(t)
        return 0.0, sd * sd * m2
    _, v, p = marg
    keep = np.abs(v) <= c
    return float(np.dot(p[keep], v[keep])), float(np.dot(p[keep], v[keep] ** 2))


def _tail_sixth(marg, c, order):
    """E[|x|^order 1{|x| > c}]."""
    if marg[0] == "normal":
        sd = marg[1]
        if sd == 0:
            return 0.0
        t = c / sd
        # E|Z|^k 1{|Z|>t} = 2^{k/2} Gamma((k+1)/2, t^2/2) / sqrt(pi)
        return sd ** order * 2 ** (order / 2) * special.gammaincc((order + 1) / 2, t * t / 2) \
            * special.gamma((order + 1) / 2) / math.sqrt(math.pi)
    _, v, p = marg
    keep = np.abs(v) > c
    return float(np.dot(p[keep], np.abs(v[keep]) ** order))


# ---------------------------------------------------------------------------
# truncation


def _stats_from(marg, cutoff, target_sd):
    mean, m2 = _truncated_raw(marg, cutoff)
    return TruncatedMoments(cutoff, mean, m2 - mean * mean, target_sd)


def truncation_stats(spec, policy: TruncationPolicy, n: int):
    """Population truncated moments at size ``n``.

    Returns a pair of :class:`TruncatedMoments` for an :class:`AtomPairSpec` and
    a single one for a :class:`DiagonalSpec` (whose target sd is ``sigma``).
    """
    c = policy.cutoff(n)
    if isinstance(spec, AtomPairSpec):
        m1, m2 = _pair_marginals(spec)
        return _stats_from(m1, c, 1.0), _stats_from(m2, c, 1.0)
    return _stats_from(_diag_marginal(spec), c, math.sqrt(spec.sigma_sq))


def _standardize_one(x, st: TruncatedMoments):
    x = np.asarray(x, dtype=float)
    if st.target_sd == 0.0:
        return np.zeros_like(x)
    if st.var < 1e-14 * st.target_sd ** 2:
        raise DegenerateTruncationError(
            f"truncated variance {st.var:.3g} vanishes at cutoff {st.cutoff:.4g}")
    kept = np.where(np.abs(x) <= st.cutoff, x, 0.0)
    return (kept - st.mean) * (st.target_sd / math.sqrt(st.var))


def truncate_standardize(values, policy: TruncationPolicy, n: int, stats):
    """Cut ``values`` at ``N^(1/2 - eps)``, recentre and rescale with population moments.

    ``values``/``stats`` are either a single array with one :class:`TruncatedMoments`
    or a pair of arrays with a pair of them.  A disabled policy is the identity.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not policy.enabled:
        return values
    if isinstance(stats, tuple):
        return tuple(_standardize_one(v, s) for v, s in zip(values, stats))
    return _standardize_one(values, stats)


def _cond_normal_moments(mu, s, c):
    """E[Y 1{|Y|<=c}], E[Y^2 1{|Y|<=c}] for Y ~ N(mu, s^2) (vectorised over mu)."""
    if s < 1e-12:
        inside = np.abs(mu) <= c
        return np.where(inside, mu, 0.0), np.where(inside, mu * mu, 0.0)
    a = (-c - mu) / s
    b = (c - mu) / s
    pa, pb = stats.norm.pdf(a), stats.norm.pdf(b)
    prob = stats.norm.cdf(b) - stats.norm.cdf(a)
    ez = pa - pb
    ez2 = prob + a * pa - b * pb
    return mu * prob + s * ez, mu * mu * prob + 2 * mu * s * ez + s * s * ez2


def truncated_correlation(spec: AtomPairSpec, policy: TruncationPolicy, n: int):
    """Exact ``(rho_hat, kappa_hat)`` of the truncated, standardised pair at size ``n``."""
    _require_valid(spec)
    c = policy.cutoff(n)
    st1, st2 = truncation_stats(spec, policy, n)
    m1, m2 = _pair_marginals(spec)
    gaussian = m1[0] == "normal"
    if gaussian:
        rho = spec.target_rho
        s = math.sqrt(max(0.0, 1.0 - rho * rho))
        phi = stats.norm.pdf

        def cross(k):
            def integrand(x):
                e1, e2 = _cond_normal_moments(rho * x, s, c)
                return (x if k == 1 else x * x) * (e1 if k == 1 else e2) * phi(x)
            return integrate.quad(integrand, -c, c, epsabs=1e-15, epsrel=1e-13, limit=200)[0]

        e12 = cross(1)
        e1122 = cross(2)
    else:
        pts, p = _joint_table(spec)
        a = np.where(np.abs(pts[:, 0]) <= c, pts[:, 0], 0.0)
        b = np.where(np.abs(pts[:, 1]) <= c, pts[:, 1], 0.0)
        ha = (a - st1.mean) / math.sqrt(st1.var)
        hb = (b - st2.mean) / math.sqrt(st2.var)
        return float(np.dot(p, ha * hb)), float(np.dot(p, ha * ha * hb * hb))
    rho_hat = (e12 - st1.mean * st2.mean) / math.sqrt(st1.var * st2.var)
    kappa_hat = e1122 / (st1.var * st2.var)  # Gaussian marginals are symmetric: means vanish
    return rho_hat, kappa_hat


def _joint_table(spec):
    if spec.kind == "rademacher":
        p = spec.coupling_probability
        pts = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
        return pts, np.array([p / 2, p / 2, (1 - p) / 2, (1 - p) / 2])
    if spec.kind == "linear_mix":
        rho = spec.target_rho
        s = math.sqrt(max(0.0, 1.0 - rho * rho))
        pts = np.array([[a, rho * a + s * b] for a in (-1.0, 1.0) for b in (-1.0, 1.0)])
        return pts, np.full(4, 0.25)
    return np.asarray(spec.points, float), np.asarray(spec.probs, float)


# ---------------------------------------------------------------------------
# moments and condition C0


def compute_moments(pair: AtomPairSpec, diag: DiagonalSpec) -> MomentSummary:
    """Exact ``(rho, sigma^2, kappa = E[xi1^2 xi2^2])`` plus a few absolute moments."""
    _require_valid(pair)
    _require_valid(diag)
    rho = pair.target_rho
    if pair.kind == "gaussian":
        kappa = 1.0 + 2.0 * rho * rho
    elif pair.kind == "linear_mix":
        kappa = rho * rho * MIX_BASES[pair.base] + (1.0 - rho * rho)
    else:
        pts, p = _joint_table(pair)
        kappa = float(np.dot(p, pts[:, 0] ** 2 * pts[:, 1] ** 2))
    m1, m2 = _pair_marginals(pair)
    md = _diag_marginal(diag)
    higher = {
        "xi1_abs6": _abs_moment(m1, 6),
        "xi2_abs6": _abs_moment(m2, 6),
        "xi1_4": _abs_moment(m1, 4),
        "zeta_abs4": _abs_moment(md, 4),
    }
    return MomentSummary(rho, diag.sigma_sq, kappa, higher)


def validate_c0(pair: AtomPairSpec, diag: DiagonalSpec, policy: TruncationPolicy | None = None,
                tau: float = 1.0) -> C0Report:
    """Check the moment hypotheses; collects every violation instead of raising."""
    report = C0Report()
    report.violations.extend(f"pair: {v}" for v in pair.violations())
    report.violations.extend(f"diagonal: {v}" for v in diag.violations())
    if not tau > 0:
        report.violations.append(f"tau = {tau:g}: moment exponent needs some tau > 0")
    if policy is not None:
        report.violations.extend(f"truncation: {v}" for v in policy.violations())
    if report.violations:
        return report
    m1, m2 = _pair_marginals(pair)
    md = _diag_marginal(diag)
    for name, marg, order in (("xi1", m1, 6 + tau), ("xi2", m2, 6 + tau), ("zeta", md, 4 + tau)):
        val = _abs_moment(marg, order)
        report.checked.append(f"E|{name}|^{order:g} = {val:.6g}")
        if not np.isfinite(val):
            report.violations.append(f"E|{name}|^{order:g} is not finite")
    if policy is not None:
        # tail decay: eps_N^-6 E|xi|^6 1{|xi| > eps_N sqrt N} must vanish; probe at large N
        for n in (10 ** 4, 10 ** 6, 10 ** 8):
            eps_n = n ** (-policy.epsilon_exponent)
            c = policy.cutoff(n)
            tail = max(_tail_sixth(m1, c, 6), _tail_sixth(m2, c, 6)) / eps_n ** 6
            tail_d = _tail_sixth(md, c, 4) / eps_n ** 4
            report.checked.append(f"N={n}: scaled tails {tail:.3g}, {tail_d:.3g}")
        if tail > 1e-6 or tail_d > 1e-6:
            report.violations.append("truncation tails do not decay at the chosen epsilon")
    return report
