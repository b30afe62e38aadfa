"""The limiting support ``E_rho``, its neighbourhoods and integration contours."""
from __future__ import annotations

from dataclasses import dataclass, replace
import functools
import math

import numpy as np
from scipy import optimize

from ..errors import GeometryError

__all__ = ["EllipseGeometry", "ContourSpec", "ellipse_distance", "semi_axes",
           "offset_points", "joukowski_radius_for_gap"]


def semi_axes(rho):
    """Real and imaginary semi-axes ``(1 + rho, 1 - rho)``.

    At ``rho = 1`` this is the segment ``[-2, 2]``; at ``rho = -1`` the segment
    ``[-2i, 2i]``.
    """
    return 1.0 + rho, 1.0 - rho


@dataclass(frozen=True)
class EllipseGeometry:
    rho: float
    delta: float = 0.0

    @property
    def axes(self):
        return semi_axes(self.rho)

    @property
    def degenerate(self):
        return abs(self.rho) >= 1.0

    @property
    def area(self):
        a, b = self.axes
        return math.pi * a * b

    def distance(self, z):
        return ellipse_distance(z, self)

    def contains(self, z, delta=None):
        """Membership in the closed neighbourhood ``{dist(z, E_rho) <= delta}``."""
        d = self.delta if delta is None else delta
        return ellipse_distance(z, self) <= d


def _rho_of(geom):
    return geom.rho if isinstance(geom, EllipseGeometry) else float(geom)


def ellipse_distance(z, geom):
    """Euclidean distance from ``z`` to the closed region ``E_rho`` (0 inside).

    ``geom`` is an :class:`EllipseGeometry` or a bare ``rho``.  Works on arrays.
    """
    a, b = semi_axes(_rho_of(geom))
    z = np.asarray(z, dtype=complex)
    x, y = np.abs(z.real), np.abs(z.imag)
    if b <= 0.0 or a <= 0.0:
        if a <= 0.0:
            a, b, x, y = b, a, y, x
        out = np.hypot(np.maximum(x - a, 0.0), y)
        return out if out.ndim else float(out)
    inside = (x / a) ** 2 + (y / b) ** 2 <= 1.0
    # nearest boundary point: X = a^2 x/(t + a^2), Y = b^2 y/(t + b^2) with
    # F(t) = (a x/(t+a^2))^2 + (b y/(t+b^2))^2 - 1 = 0, F decreasing on t >= 0
    lo = np.zeros_like(x)
    hi = max(a, b) * np.hypot(x, y) + 1e-300
    for _ in range(64):
        t = 0.5 * (lo + hi)
        F = (a * x / (t + a * a)) ** 2 + (b * y / (t + b * b)) ** 2 - 1.0
        pos = F > 0
        lo = np.where(pos, t, lo)
        hi = np.where(pos, hi, t)
    t = 0.5 * (lo + hi)
    X = a * a * x / (t + a * a)
    Y = b * b * y / (t + b * b)
    out = np.where(inside, 0.0, np.hypot(x - X, y - Y))
    return out if out.ndim else float(out)


def offset_points(rho, dist, theta):
    """Points at distance ``dist`` outside ``E_rho`` along the outward normal at eccentric angle ``theta``."""
    a, b = semi_axes(rho)
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    base = a * c + 1j * b * s
    v = b * c + 1j * a * s
    q = np.abs(v)
    if np.any(q == 0):
        # degenerate segment end caps: the normal rotates through the tip
        v = np.where(q == 0, base, v)
        q = np.abs(v)
    return base + dist * v / q


def _joukowski(rho, r, t):
    e = np.exp(1j * t)
    z = r * rho / e + e / r
    dz = -1j * r * rho / e + 1j * e / r
    return z, dz


def _offset(rho, delta, t):
    a, b = semi_axes(rho)
    c, s = np.cos(t), np.sin(t)
    base, dbase = a * c + 1j * b * s, -a * s + 1j * b * c
    v, dv = b * c + 1j * a * s, -b * s + 1j * a * c
    q = np.abs(v)
    dq = (a * a - b * b) * s * c / q
    n = v / q
    dn = dv / q - v * dq / (q * q)
    return base + delta * n, dbase + delta * dn


@dataclass(frozen=True)
class ContourSpec:
    """A closed contour around ``E_rho`` sampled for the periodic trapezoid rule.

    ``family="joukowski"`` is the image of ``|s| = r`` (``r < 1``) under
    ``s -> rho*s + 1/s`` with ``s = r e^{-it}``, i.e. ``z(t) = r*rho*e^{-it} + e^{it}/r``,
    which runs counter-clockwise since ``r^2 |rho| < 1``.
    ``family="offset"`` is the boundary of ``{dist(z, E_rho) <= delta}``,
    parametrised by the eccentric angle of the foot point (``|rho| < 1`` only).
    """

    family: str
    rho: float
    param: float
    nodes: int = 512
    orientation: str = "ccw"

    @classmethod
    def joukowski(cls, rho, r, nodes=512, orientation="ccw"):
        return cls("joukowski", float(rho), float(r), int(nodes), orientation)

    @classmethod
    def offset(cls, rho, delta, nodes=512, orientation="ccw"):
        return cls("offset", float(rho), float(delta), int(nodes), orientation)

    @classmethod
    def for_gap(cls, rho, gap, nodes=512, orientation="ccw"):
        """Joukowski contour whose distance to ``E_rho`` equals ``gap``."""
        return cls.joukowski(rho, joukowski_radius_for_gap(rho, gap), nodes, orientation)

    @classmethod
    def circle(cls, radius, nodes=512, orientation="ccw"):
        return cls.joukowski(0.0, 1.0 / radius, nodes, orientation)

    def with_nodes(self, nodes):
        return replace(self, nodes=int(nodes))

    def validate(self):
        if self.nodes < 8:
            raise GeometryError("a contour needs at least 8 nodes")
        if self.orientation not in ("ccw", "cw"):
            raise GeometryError(f"unknown orientation {self.orientation!r}")
        if self.family == "joukowski":
            # at rho = 0 the image is the circle |z| = 1/r, valid for any r > 0
            if not 0.0 < self.param < (np.inf if self.rho == 0 else 1.0):
                raise GeometryError(f"Joukowski radius r = {self.param} must lie in (0, 1)")
        elif self.family == "offset":
            if not self.param > 0:
                raise GeometryError("offset contour needs delta > 0")
            if abs(self.rho) >= 1.0:
                raise GeometryError("offset contour requires |rho| < 1; use a Joukowski contour")
        else:
            raise GeometryError(f"unknown contour family {self.family!r}")

    def points(self, nodes=None):
        """Nodes ``z_k`` and trapezoid weights ``dz_k = z'(t_k) * 2pi/K``."""
        self.validate()
        K = int(nodes or self.nodes)
        t = 2.0 * np.pi * np.arange(K) / K
        if self.family == "joukowski":
            z, dz = _joukowski(self.rho, self.param, t)
        else:
            z, dz = _offset(self.rho, self.param, t)
        if self.orientation == "cw":
            z, dz = z[::-1], -dz[::-1]
        return z, dz * (2.0 * np.pi / K)

    def winding_number(self, p, nodes=None):
        z, dz = self.points(nodes)
        return complex(np.sum(dz / (z - p)) / (2j * np.pi))

    def min_distance(self, rho=None, nodes=None):
        z, _ = self.points(nodes)
        return float(np.min(ellipse_distance(z, self.rho if rho is None else rho)))


def _joukowski_gap(rho, r, samples=4096):
    t = 2.0 * np.pi * np.arange(samples) / samples
    z, _ = _joukowski(rho, r, t)
    return float(np.min(ellipse_distance(z, rho)))


@functools.lru_cache(maxsize=256)
def joukowski_radius_for_gap(rho, gap):
    """Solve for ``r`` in (0, 1) such that the image of ``|s| = r`` sits ``gap`` away from ``E_rho``."""
    if gap <= 0:
        raise GeometryError("gap must be positive")
    f = lambda r: _joukowski_gap(rho, r) - gap
    return float(optimize.brentq(f, 1e-3, 1.0 - 1e-12, xtol=1e-14))
