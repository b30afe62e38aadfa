"""Analytic test functions ``f`` for linear statistics ``tr f(X)``."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
import math

import numpy as np
from numpy.polynomial import polynomial as P

from .faber import faber_table, faber_to_power

__all__ = ["TestFunction"]

KINDS = ("polynomial", "faber", "faber_series", "exponential", "pole")


def _is_real(x):
    return bool(np.all(np.imag(np.asarray(x, dtype=complex)) == 0))


def _clean(c):
    c = complex(c)
    return c.real if c.imag == 0 else c


@dataclass(frozen=True)
class TestFunction:
    """An analytic function with value and derivative at complex points.

    Kinds: ``polynomial`` (power coefficients, ascending), ``faber`` (``F_index``
    for a given ``rho``), ``faber_series`` (Faber coefficients for ``rho``),
    ``exponential`` (``exp(scale*z)``) and ``pole`` (``1/(z - pole)``).
    """

    __test__ = False  # not a pytest class

    kind: str
    coeffs: tuple = ()
    index: int = 0
    rho: float = 0.0
    scale: complex = 1.0
    pole: complex = 0.0
    name: str = field(default="", compare=False)

    # constructors ---------------------------------------------------------
    @classmethod
    def polynomial(cls, coeffs, name=""):
        return cls("polynomial", tuple(_clean(c) for c in coeffs), name=name)

    @classmethod
    def monomial(cls, j):
        return cls.polynomial([0.0] * j + [1.0], name=f"z^{j}")

    @classmethod
    def faber(cls, j, rho):
        return cls("faber", index=int(j), rho=float(rho), name=f"F_{j}")

    @classmethod
    def faber_series(cls, coeffs, rho, name=""):
        return cls("faber_series", tuple(_clean(c) for c in coeffs), rho=float(rho), name=name)

    @classmethod
    def exponential(cls, scale):
        return cls("exponential", scale=_clean(scale), name=f"exp({_clean(scale):g}z)")

    @classmethod
    def pole_shift(cls, pole):
        return cls("pole", pole=_clean(pole), name=f"1/(z-{_clean(pole):g})")

    # evaluation -----------------------------------------------------------
    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        k = self.kind
        if k == "polynomial":
            out = P.polyval(z, np.asarray(self.coeffs, dtype=complex))
        elif k == "faber":
            out = faber_table(self.index, z, self.rho)[self.index]
        elif k == "faber_series":
            F = faber_table(len(self.coeffs) - 1, z, self.rho)
            out = np.tensordot(np.asarray(self.coeffs, dtype=complex), F, axes=1)
        elif k == "exponential":
            out = np.exp(self.scale * z)
        elif k == "pole":
            out = 1.0 / (z - self.pole)
        else:
            raise ValueError(f"unknown test function kind {k!r}")
        return complex(out) if np.ndim(out) == 0 else out

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        k = self.kind
        if k == "polynomial":
            c = np.asarray(self.coeffs, dtype=complex)
            out = P.polyval(z, P.polyder(c)) if len(c) > 1 else np.zeros_like(z)
        elif k == "faber":
            out = faber_table(self.index, z, self.rho, derivative=True)[1][self.index]
        elif k == "faber_series":
            _, dF = faber_table(len(self.coeffs) - 1, z, self.rho, derivative=True)
            out = np.tensordot(np.asarray(self.coeffs, dtype=complex), dF, axes=1)
        elif k == "exponential":
            out = self.scale * np.exp(self.scale * z)
        elif k == "pole":
            out = -1.0 / (z - self.pole) ** 2
        else:
            raise ValueError(f"unknown test function kind {k!r}")
        return complex(out) if np.ndim(out) == 0 else out

    # metadata -------------------------------------------------------------
    @property
    def is_real(self):
        """Whether ``f(z) + f(conj z)`` is real, i.e. ``f(conj z) = conj f(z)``."""
        if self.kind in ("polynomial", "faber_series"):
            return _is_real(self.coeffs)
        if self.kind == "exponential":
            return _is_real(self.scale)
        if self.kind == "pole":
            return _is_real(self.pole)
        return True

    @property
    def degree(self):
        if self.kind == "polynomial":
            return len(self.coeffs) - 1
        if self.kind == "faber":
            return self.index
        if self.kind == "faber_series":
            return len(self.coeffs) - 1
        return math.inf

    def singularities(self):
        return [complex(self.pole)] if self.kind == "pole" else []

    def analyticity(self):
        if self.kind == "pole":
            return f"analytic off z = {self.pole}"
        return "entire"

    def power_coefficients(self):
        """Ascending power-basis coefficients for the polynomial kinds."""
        if self.kind == "polynomial":
            return np.asarray(self.coeffs, dtype=complex)
        if self.kind == "faber":
            return faber_to_power(self.index, self.rho).astype(complex)
        if self.kind == "faber_series":
            out = np.zeros(len(self.coeffs), dtype=complex)
            for j, a in enumerate(self.coeffs):
                out[: j + 1] += a * faber_to_power(j, self.rho)
            return out
        raise ValueError(f"{self.kind} is not a polynomial")

    @property
    def label(self):
        return self.name or f"{self.kind}"

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind in ("polynomial", "faber_series"):
            d["coeffs"] = [_jsonable(c) for c in self.coeffs]
        if self.kind == "faber":
            d["index"] = self.index
        if self.kind in ("faber", "faber_series"):
            d["rho"] = self.rho
        if self.kind == "exponential":
            d["scale"] = _jsonable(self.scale)
        if self.kind == "pole":
            d["pole"] = _jsonable(self.pole)
        if self.name:
            d["name"] = self.name
        return d

    @classmethod
    def from_dict(cls, d, rho=None):
        """Build from a config entry; ``rho`` fills in Faber kinds that omit it."""
        k = d["kind"]
        r = d.get("rho", rho if rho is not None else 0.0)
        if k == "polynomial":
            f = cls.polynomial([_unjson(c) for c in d["coeffs"]])
        elif k == "monomial":
            f = cls.monomial(int(d["index"]))
        elif k == "faber":
            f = cls.faber(int(d["index"]), r)
        elif k == "faber_series":
            f = cls.faber_series([_unjson(c) for c in d["coeffs"]], r)
        elif k == "exponential":
            f = cls.exponential(_unjson(d.get("scale", 1.0)))
        elif k == "pole":
            f = cls.pole_shift(_unjson(d["pole"]))
        else:
            raise ValueError(f"unknown test function kind {k!r}")
        if d.get("name"):
            f = replace(f, name=d["name"])
        return f


def _jsonable(c):
    c = complex(c)
    return c.real if c.imag == 0 else [c.real, c.imag]


def _unjson(c):
    if isinstance(c, (list, tuple)):
        return complex(c[0], c[1])
    return c
