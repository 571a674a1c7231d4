"""Argument cuts: polyhedral convex hull of an annular sector.

For an argument interval ``[l, u]`` the set

    D = { c in C : |c| >= 1, arg(c) in [l, u] }

has, when ``u - l <= pi``, the convex hull cut out by the two boundary rays
and the chord joining ``e^{il}`` and ``e^{iu}``. Wider intervals have the
whole plane as hull and produce no cuts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ArgInterval",
    "Cut",
    "CutSet",
    "envelope_cuts",
    "min_envelope_norm",
    "contains",
    "TWO_PI",
]

TWO_PI = 2.0 * math.pi

# Intervals this close to width pi collapse to a single halfplane.
PI_WIDTH_TOL = 1e-12


@dataclass(frozen=True)
class ArgInterval:
    l: float
    u: float

    def __post_init__(self):
        if not (0.0 <= self.l <= self.u <= TWO_PI):
            raise ValueError(
                f"argument interval must satisfy 0 <= l <= u <= 2*pi, got "
                f"[{self.l}, {self.u}]"
            )

    @property
    def width(self) -> float:
        return self.u - self.l

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.l + self.u)

    def split(self) -> tuple[ArgInterval, ArgInterval]:
        z = self.midpoint
        return ArgInterval(self.l, z), ArgInterval(z, self.u)


@dataclass(frozen=True)
class Cut:
    """Halfplane ``alpha * x + beta * y >= rho`` in the (Re c, Im c) plane."""

    alpha: float
    beta: float
    rho: float

    def value(self, x, y):
        return self.alpha * x + self.beta * y - self.rho


@dataclass(frozen=True)
class CutSet:
    cuts: tuple[Cut, ...] = ()

    def __len__(self):
        return len(self.cuts)

    def __iter__(self):
        return iter(self.cuts)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows ``[alpha, beta]`` and right-hand sides ``rho``."""
        if not self.cuts:
            return np.zeros((0, 2)), np.zeros(0)
        coef = np.array([[c.alpha, c.beta] for c in self.cuts])
        rho = np.array([c.rho for c in self.cuts])
        return coef, rho


def envelope_cuts(iv: ArgInterval) -> CutSet:
    """Argument cuts describing the convex hull of the sector over ``iv``.

    Every cut is stored with a unit normal. Widths above pi give an empty
    set, width pi a single halfplane through the origin, and narrower
    intervals the two rays plus the chord.
    """
    d = iv.width
    if d > math.pi + PI_WIDTH_TOL:
        return CutSet()
    sl, cl = math.sin(iv.l), math.cos(iv.l)
    lower_ray = Cut(-sl, cl, 0.0)
    if abs(d - math.pi) <= PI_WIDTH_TOL:
        return CutSet((lower_ray,))
    su, cu = math.sin(iv.u), math.cos(iv.u)
    upper_ray = Cut(su, -cu, 0.0)
    a = 0.5 * (cl + cu)
    b = 0.5 * (sl + su)
    r = math.hypot(a, b)
    # a x + b y >= a^2 + b^2, scaled by 1/r.
    chord = Cut(a / r, b / r, r)
    return CutSet((lower_ray, upper_ray, chord))


def min_envelope_norm(iv: ArgInterval) -> float:
    """Smallest modulus over the convex hull of the sector, cos(width/2)."""
    if iv.width > math.pi + PI_WIDTH_TOL:
        raise ValueError("hull of a sector wider than pi contains the origin")
    return math.cos(0.5 * iv.width)


def contains(cs: CutSet, x: float, y: float, tol: float = 0.0) -> bool:
    return all(c.value(x, y) >= -tol for c in cs)
