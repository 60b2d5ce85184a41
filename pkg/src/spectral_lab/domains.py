"""Unbounded smooth convex domains in canonical position.

Every domain here contains the sector ``{|arg z| < alpha}`` and is contained
in the open right half-plane.  The boundary is parameterized by a natural
parameter ``t`` (not arclength) and runs with the domain on its left, from
the upper asymptote (``t -> -inf``) to the lower one (``t -> +inf``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "BoundaryPoint",
    "ConvexDomain",
    "HalfPlane",
    "Hyperbola",
    "Parabola",
    "sector_approx",
    "aperture",
    "boundary_point",
    "contains",
    "arg_tail_bound",
]

TWO_PI = 2.0 * math.pi


class DomainError(ValueError):
    """Raised for points outside the closed domain or invalid parameters."""


@dataclass(frozen=True)
class BoundaryPoint:
    """A point on the boundary together with its curve velocity."""

    param: float
    sigma: complex
    dsigma: complex

    @property
    def speed(self) -> float:
        return abs(self.dsigma)

    @property
    def tangent(self) -> complex:
        """Unit tangent ``dsigma / |dsigma|``."""
        return self.dsigma / abs(self.dsigma)


class ConvexDomain:
    """Base class; subclasses supply the curve and the membership test."""

    kind = "abstract"
    # parameters beyond this overflow the curve evaluation
    max_param = math.inf
    # longest quadrature panel in parameter units
    max_panel = math.inf

    # -- curve ---------------------------------------------------------------
    def curve(self, t):
        """Return ``(sigma, dsigma/dt, d2sigma/dt2)`` for an array of params."""
        raise NotImplementedError

    def interior_value(self, z):
        """Signed closed-form membership function, positive inside."""
        raise NotImplementedError

    def param_radius(self, radius: float) -> float:
        """A parameter bound T with ``|sigma(t)| > radius`` whenever ``|t| > T``."""
        raise NotImplementedError

    @property
    def alpha(self) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    # -- derived -------------------------------------------------------------
    def boundary_point(self, t: float) -> BoundaryPoint:
        s, ds, _ = self.curve(np.asarray(float(t)))
        return BoundaryPoint(float(t), complex(s), complex(ds))

    def curvature(self, t):
        """Signed curvature; positive because the curve turns left."""
        _, d1, d2 = self.curve(np.asarray(t, dtype=float))
        return np.imag(np.conj(d1) * d2) / np.abs(d1) ** 3

    def inside(self, z) -> np.ndarray:
        return self.interior_value(np.asarray(z, dtype=complex)) > 0

    @property
    def asymptote_angles(self) -> tuple[float, float]:
        """Limiting directions of ``sigma(t)`` as ``t -> -inf`` and ``t -> +inf``.

        The second angle is returned on the branch ``[pi, 2 pi]`` so that the
        argument of ``sigma(t) - z`` increases continuously between them.
        """
        return self.alpha, TWO_PI - self.alpha

    def nearest_param(self, z, grid: int = 257, iters: int = 60):
        """Parameter of the boundary point closest to each ``z``.

        Returns ``(t, dist)`` arrays of the same shape as ``z``.  A coarse grid
        brackets the global minimum of ``|sigma(t) - z|``; a safeguarded Newton
        iteration on the stationarity condition then polishes it.
        """
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        zf = z.ravel()
        s0 = complex(self.curve(np.asarray(0.0))[0])
        radius = np.abs(zf) + np.abs(zf - s0) + 1.0
        T = np.array([self.param_radius(r) for r in radius])
        u = np.linspace(-1.0, 1.0, grid)
        tg = T[:, None] * u[None, :]
        sg, _, _ = self.curve(tg)
        d2 = np.abs(sg - zf[:, None]) ** 2
        k = np.clip(np.argmin(d2, axis=1), 1, grid - 2)
        rows = np.arange(zf.size)
        lo = tg[rows, k - 1]
        hi = tg[rows, k + 1]
        t = tg[rows, k]

        def phi(tt):
            s, d1, dd = self.curve(tt)
            r = s - zf
            return np.real(np.conj(r) * d1), np.abs(d1) ** 2 + np.real(np.conj(r) * dd)

        for _ in range(iters):
            g, dg = phi(t)
            lo = np.where(g < 0, t, lo)
            hi = np.where(g > 0, t, hi)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = t - g / dg
            bad = ~np.isfinite(step) | (step <= lo) | (step >= hi) | (dg <= 0)
            new = np.where(bad, 0.5 * (lo + hi), step)
            done = np.abs(new - t) <= 1e-15 * (1.0 + np.abs(t))
            t = new
            if np.all(done):
                break
        s, _, _ = self.curve(t)
        return t.reshape(shape), np.abs(s - zf).reshape(shape)

    def signed_distance(self, z):
        """Euclidean distance to the boundary, negative outside the domain."""
        _, dist = self.nearest_param(z)
        return np.where(self.inside(z), dist, -dist)

    def contains(self, z, margin: float = 0.0) -> bool:
        z = complex(z)
        if not bool(self.inside(z)):
            return False
        if margin <= 0:
            return True
        return float(self.nearest_param(z)[1]) >= margin

    def arg_tail_bound(self, z, m: float, on_boundary: bool | None = None) -> float:
        """Mass of the double-layer kernel over parameters outside ``[-m, m]``.

        Each tail equals the continuous increase of ``arg(sigma(t) - z)`` from
        the truncation point to the asymptotic direction, divided by pi.  For a
        boundary point lying inside a tail, the half-turn made while passing
        through ``z`` is not part of the kernel mass and is removed.
        """
        z = complex(z)
        if m <= 0:
            raise DomainError("truncation parameter must be positive")
        t0, dist = self.nearest_param(z)
        if on_boundary is None:
            on_boundary = float(dist) <= 1e-12 * (1.0 + abs(z))
        if not on_boundary and not bool(self.inside(z)):
            raise DomainError(f"point {z} is outside the closed domain")
        return float(self.tail_mass(np.array([z]), m, np.array([on_boundary]), np.atleast_1d(t0))[0])

    def tail_mass(self, z, m, on_boundary, t0):
        """Vectorized core of :meth:`arg_tail_bound` (no validation)."""
        th_minus, th_plus = self.asymptote_angles
        s, _, _ = self.curve(np.array([-m, m]))
        upper = _wrap(th_plus - np.angle(s[1] - z))
        lower = _wrap(np.angle(s[0] - z) - th_minus)
        upper = np.where(on_boundary & (t0 > m), np.maximum(upper - math.pi, 0.0), upper)
        lower = np.where(on_boundary & (t0 < -m), np.maximum(lower - math.pi, 0.0), lower)
        return (upper + lower) / math.pi

    def expected_mass(self, on_boundary: bool = False) -> float:
        """Total kernel mass: ``2 - 2 alpha/pi`` inside, ``1 - 2 alpha/pi`` on the boundary."""
        return (1.0 if on_boundary else 2.0) - 2.0 * self.alpha / math.pi


def _wrap(x, eps=1e-12):
    # branch [0, 2 pi) with rounding slack around 0
    return np.maximum(np.mod(x + eps, TWO_PI) - eps, 0.0)


@dataclass(frozen=True)
class HalfPlane(ConvexDomain):
    """The open right half-plane; ``sigma(t) = -i t``."""

    kind = "halfplane"

    def curve(self, t):
        t = np.asarray(t, dtype=float)
        return -1j * t, np.full(t.shape, -1j), np.zeros(t.shape, dtype=complex)

    def interior_value(self, z):
        return np.real(z)

    def param_radius(self, radius):
        return float(radius)

    def nearest_param(self, z, grid=0, iters=0):
        z = np.asarray(z, dtype=complex)
        return -np.imag(z), np.abs(np.real(z))

    @property
    def alpha(self):
        return math.pi / 2

    def to_dict(self):
        return {"kind": "halfplane"}


@dataclass(frozen=True)
class Hyperbola(ConvexDomain):
    """Region ``x > a sqrt(1 + y^2/b^2)``; ``sigma(t) = a cosh t - i b sinh t``."""

    a: float
    b: float
    kind = "hyperbola"
    max_param = 700.0
    # the kernel has complex singularities spaced by pi in Im t
    max_panel = 0.5

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DomainError("hyperbola needs a > 0 and b > 0")

    def curve(self, t):
        t = np.asarray(t, dtype=float)
        ch, sh = np.cosh(t), np.sinh(t)
        s = self.a * ch - 1j * self.b * sh
        d1 = self.a * sh - 1j * self.b * ch
        return s, d1, s

    def interior_value(self, z):
        x, y = np.real(z), np.imag(z)
        return x - self.a * np.sqrt(1.0 + (y / self.b) ** 2)

    def param_radius(self, radius):
        return math.asinh(radius / math.hypot(self.a, self.b)) + 1.0

    @property
    def alpha(self):
        return math.atan2(self.b, self.a)

    def to_dict(self):
        return {"kind": "hyperbola", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Parabola(ConvexDomain):
    """Region ``x > y^2 / (4p)``; ``sigma(t) = t^2/(4p) - i t``."""

    p: float
    kind = "parabola"

    def __post_init__(self):
        if not self.p > 0:
            raise DomainError("parabola needs p > 0")

    def curve(self, t):
        t = np.asarray(t, dtype=float)
        s = t * t / (4 * self.p) - 1j * t
        d1 = t / (2 * self.p) - 1j
        d2 = np.full(t.shape, 1.0 / (2 * self.p), dtype=complex)
        return s, d1, d2

    def interior_value(self, z):
        x, y = np.real(z), np.imag(z)
        return x - y * y / (4 * self.p)

    def param_radius(self, radius):
        return float(radius) + 1.0

    @property
    def alpha(self):
        return 0.0

    def to_dict(self):
        return {"kind": "parabola", "p": self.p}


def sector_approx(alpha: float, a: float = 1e-3) -> Hyperbola:
    """Smooth stand-in for the sector of half-angle ``alpha``: a thin-vertex hyperbola."""
    if not 0 < alpha < math.pi / 2:
        raise DomainError("sector half-angle must lie in (0, pi/2)")
    return Hyperbola(a, a * math.tan(alpha))


def aperture(domain: ConvexDomain) -> float:
    return domain.alpha


def boundary_point(domain: ConvexDomain, t: float) -> BoundaryPoint:
    return domain.boundary_point(t)


def contains(domain: ConvexDomain, z, margin: float = 0.0) -> bool:
    return domain.contains(z, margin)


def arg_tail_bound(domain: ConvexDomain, z, m: float) -> float:
    return domain.arg_tail_bound(z, m)
