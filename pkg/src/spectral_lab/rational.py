"""Rational functions in pole/residue form and the two epsilon devices.

``f(z) = f_inf + sum_k sum_j c[k][j-1] / (z - p_k)**j``
"""

from __future__ import annotations

import json
import math
import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve
from scipy.optimize import minimize_scalar

from .domains import ConvexDomain
from .numrange import MatrixOperator

__all__ = [
    "PoleError",
    "ValidityError",
    "RationalFunction",
    "eval_matrix_direct",
    "eval_matrix_spectral",
    "sup_norm",
    "mobius_damp",
    "regularize_matrix",
]

POLE_MARGIN = 1e-6


class PoleError(ArithmeticError):
    """Evaluation point within rounding distance of a pole."""


class ValidityError(ValueError):
    """A pole lies in (or too close to) the closed domain."""


class RationalFunction:
    """Partial-fraction representation of a rational function.

    Parameters
    ----------
    poles : sequence of (complex, int)
        Pole locations with their orders.
    terms : sequence of sequences of complex
        ``terms[k][j-1]`` multiplies ``(z - p_k)**-j``; ``len(terms[k])``
        must equal the order of pole ``k``.
    inf : complex
        Value at infinity.
    """

    def __init__(self, poles=(), terms=(), inf=0.0):
        poles = [(complex(p), int(o)) for p, o in poles]
        terms = [[complex(c) for c in row] for row in terms]
        if len(poles) != len(terms):
            raise ValueError("one coefficient row per pole required")
        for (p, o), row in zip(poles, terms):
            if o < 1 or len(row) != o:
                raise ValueError(f"pole {p}: order {o} needs {o} coefficients")
        self.poles = tuple(poles)
        self.terms = tuple(tuple(r) for r in terms)
        self.inf = complex(inf)

    # -- constructors ----------------------------------------------------------
    @classmethod
    def constant(cls, c):
        return cls(inf=c)

    @classmethod
    def resolvent(cls, p, order=1, coeff=1.0):
        """``coeff / (z - p)**order``."""
        row = [0.0] * (order - 1) + [coeff]
        return cls([(p, order)], [row])

    @classmethod
    def mobius(cls, a, b, c, d):
        """``(a z + b) / (c z + d)`` with ``c != 0``."""
        if c == 0:
            raise ValueError("use a polynomial-free form: c must be nonzero")
        p = -d / c
        return cls([(p, 1)], [[(b - a * d / c) / c]], inf=a / c)

    # -- basic properties -------------------------------------------------------
    @property
    def vanishes_at_infinity(self) -> bool:
        return self.inf == 0

    @property
    def is_zero(self) -> bool:
        return self.inf == 0 and all(c == 0 for row in self.terms for c in row)

    def pole_locations(self) -> np.ndarray:
        return np.array([p for p, _ in self.poles], dtype=complex)

    def __call__(self, z):
        return self.eval(z)

    def eval(self, z):
        """Evaluate at a scalar or an array of points."""
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.inf, dtype=complex)
        for (p, _), row in zip(self.poles, self.terms):
            d = z - p
            if np.any(np.abs(d) <= 1e-14 * max(1.0, abs(p))):
                raise PoleError(f"evaluation within 1e-14 of pole {p}")
            inv = 1.0 / d
            acc = np.zeros(z.shape, dtype=complex)
            for c in reversed(row):
                acc = (acc + c) * inv
            out = out + acc
        return out if out.ndim else complex(out)

    def scaled(self, s) -> "RationalFunction":
        return RationalFunction(
            self.poles, [[s * c for c in row] for row in self.terms], self.inf * s
        )

    # -- validity ---------------------------------------------------------------
    def pole_clearance(self, domain: ConvexDomain) -> float:
        """Smallest distance from a pole to the closed domain (inf if no poles)."""
        locs = self.pole_locations()
        if locs.size == 0:
            return math.inf
        d = domain.signed_distance(locs)
        return float(np.min(-d))

    def valid_for(self, domain: ConvexDomain) -> bool:
        return self.pole_clearance(domain) >= POLE_MARGIN

    def check_valid(self, domain: ConvexDomain):
        c = self.pole_clearance(domain)
        if c < POLE_MARGIN:
            raise ValidityError(f"pole clearance {c:.3e} below {POLE_MARGIN:g}")

    # -- serialization ------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "poles": [{"re": p.real, "im": p.imag, "order": o} for p, o in self.poles],
            "terms": [[{"re": c.real, "im": c.imag} for c in row] for row in self.terms],
            "inf": {"re": self.inf.real, "im": self.inf.imag},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RationalFunction":
        poles = [(complex(q["re"], q.get("im", 0.0)), q.get("order", 1)) for q in d.get("poles", [])]
        terms = [[complex(c["re"], c.get("im", 0.0)) for c in row] for row in d.get("terms", [])]
        inf = d.get("inf", {"re": 0.0, "im": 0.0})
        return cls(poles, terms, complex(inf["re"], inf.get("im", 0.0)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def __eq__(self, other):
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return (self.poles, self.terms, self.inf) == (other.poles, other.terms, other.inf)

    def __repr__(self):
        return f"RationalFunction(poles={list(self.poles)}, inf={self.inf})"


# -- matrix evaluation ----------------------------------------------------------

def _lu(m):
    # singularity is detected from the pivots by the callers
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        return lu_factor(m, check_finite=False)


def eval_matrix_direct(f: RationalFunction, A: MatrixOperator) -> np.ndarray:
    """``f(A)`` from factorized shifted solves, one LU per pole.

    ``(A - p I)^{-j}`` is applied as ``j`` repeated solves against the
    factorization of ``A - p I``; resolvent powers are never formed.
    """
    a = A.entries if isinstance(A, MatrixOperator) else np.asarray(A, dtype=complex)
    n = a.shape[0]
    eye = np.eye(n, dtype=complex)
    out = f.inf * eye
    for (p, _), row in zip(f.poles, f.terms):
        shifted = a - p * eye
        lu = _lu(shifted)
        if np.min(np.abs(np.diag(lu[0]))) <= 1e-14 * max(1.0, np.abs(shifted).max()):
            raise np.linalg.LinAlgError(f"pole {p} coincides with an eigenvalue")
        power = eye
        for c in row:
            power = lu_solve(lu, power, check_finite=False)
            if c != 0:
                out = out + c * power
    return out


def eval_matrix_spectral(f: RationalFunction, A: MatrixOperator) -> np.ndarray:
    """``U diag(f(lambda)) U*`` for a normal matrix (Schur form is diagonal)."""
    from scipy.linalg import schur

    t, u = schur(A.entries, output="complex")
    lam = np.diag(t)
    return (u * f.eval(lam)) @ u.conj().T


# -- sup norm -------------------------------------------------------------------

def _boundary_abs(f, domain, t):
    s, _, _ = domain.curve(t)
    return np.abs(f.eval(s))


def sup_norm(f: RationalFunction, domain: ConvexDomain, n_samples: int = 4096) -> float:
    """``max(sup over the boundary of |f|, |f(inf)|)`` by the maximum principle.

    The boundary is scanned on a uniform grid over a window covering the
    poles' footprints, on grids graded toward each pole's nearest boundary
    parameter, and on a geometric grid out to large parameters; every local
    maximum is then polished with a bounded scalar search.
    """
    f.check_valid(domain)
    if f.is_zero:
        return 0.0
    locs = f.pole_locations()
    if locs.size:
        tp, dp = domain.nearest_param(locs)
        tp, dp = np.atleast_1d(tp), np.atleast_1d(dp)
    else:
        tp, dp = np.zeros(0), np.zeros(0)
    window = max(4.0, 2.0 * float(np.max(np.abs(tp), initial=0.0)) + 2.0)
    grids = [np.linspace(-window, window, n_samples)]
    geo = np.geomspace(window, 1e8, 512)
    grids += [geo, -geo]
    for t0, d0 in zip(tp, dp):
        speed = float(np.abs(domain.curve(np.asarray(t0))[1]))
        h = max(d0 / speed, 1e-12)
        off = np.geomspace(h * 1e-2, window, 256)
        grids += [t0 + off, t0 - off, np.array([t0])]
    t = np.unique(np.concatenate(grids))
    t = t[np.abs(t) < domain.max_param]
    vals = _boundary_abs(f, domain, t)
    best = float(np.max(vals))
    mid, left, right = vals[1:-1], vals[:-2], vals[2:]
    peak = (mid >= left) & (mid >= right) & (mid >= 0.5 * best)
    # flat stretches (|f| constant on the boundary) have nothing to polish
    peak &= mid - np.minimum(left, right) > 1e-14 * best
    interior = np.nonzero(peak)[0] + 1
    interior = interior[np.argsort(-vals[interior], kind="stable")[:64]]
    for k in interior:
        res = minimize_scalar(
            lambda x: -float(_boundary_abs(f, domain, np.asarray(x))),
            bounds=(t[k - 1], t[k + 1]),
            method="bounded",
            options={"xatol": 1e-12 * max(1.0, abs(t[k]))},
        )
        best = max(best, -float(res.fun))
    return max(best, abs(f.inf))


# -- epsilon devices --------------------------------------------------------------

def mobius_damp(f: RationalFunction, eps: float) -> RationalFunction:
    """Partial fractions of ``f(z) / (1 + eps z)``.

    The factor is ``(1/eps) / (z - q)`` with ``q = -1/eps``; each term
    ``1/((z-p)^j (z-q))`` splits as
    ``(q-p)^{-j}/(z-q) - sum_i (q-p)^{-(j-i+1)}/(z-p)^i``.
    """
    if not eps > 0:
        raise ValueError("damping parameter must be positive")
    q = -1.0 / eps
    k = 1.0 / eps
    q_coeff = k * f.inf
    poles, terms = [], []
    for (p, order), row in zip(f.poles, f.terms):
        if abs(p - q) <= 1e-12 * max(1.0, abs(q)):
            raise ValueError("damping pole collides with a pole of f")
        new = [0j] * order
        for j, c in enumerate(row, start=1):
            if c == 0:
                continue
            q_coeff += k * c / (q - p) ** j
            for i in range(1, j + 1):
                new[i - 1] -= k * c / (q - p) ** (j - i + 1)
        poles.append((p, order))
        terms.append(new)
    poles.append((q, 1))
    terms.append([q_coeff])
    return RationalFunction(poles, terms, 0.0)


def regularize_matrix(A: MatrixOperator, eps: float) -> MatrixOperator:
    """``A (I + eps A)^{-1}``, computed as a solve against ``I + eps A``."""
    if not eps > 0:
        raise ValueError("regularization parameter must be positive")
    a = A.entries
    n = a.shape[0]
    m = np.eye(n) + eps * a
    lu = _lu(m)
    if np.min(np.abs(np.diag(lu[0]))) <= 1e-14 * max(1.0, np.abs(m).max()):
        raise np.linalg.LinAlgError("I + eps A is singular")
    # A and (I + eps A)^{-1} commute
    return MatrixOperator(lu_solve(lu, a, check_finite=False))
