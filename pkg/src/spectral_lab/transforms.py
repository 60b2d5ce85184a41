"""Double-layer kernel, Cauchy transforms and truncated boundary quadrature.

All integrals run over the curve parameter ``t``; the Gauss-Legendre weights
carry the speed ``|sigma'(t)|`` so that ``sum(w * h(sigma))`` approximates
``int h ds`` exactly up to quadrature error.  With unit tangent ``tau`` the
line element is ``d sigma = tau ds``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .domains import BoundaryPoint, ConvexDomain, DomainError
from .numrange import MatrixOperator, numrange_boundary
from .rational import RationalFunction

__all__ = [
    "SingularityError",
    "TruncationError",
    "BoundaryQuadrature",
    "TransformResult",
    "mu_kernel",
    "mu_kernel_limit",
    "mu_operator",
    "build_quadrature",
    "quadrature_for_matrix",
    "mass",
    "cauchy_f_scalar",
    "cauchy_f_matrix",
    "conj_cauchy_g",
    "g_matrix",
    "S_scalar",
    "S_matrix",
]

GL_ORDER = 16
M_CAP = 1e12
BOUNDARY_FOCUS_H = 0.25
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)
_TWO_PI_I = 2j * math.pi


class SingularityError(ArithmeticError):
    """Kernel evaluated at the boundary point itself."""


class TruncationError(RuntimeError):
    """The truncation rule could not meet the requested tolerance."""


@dataclass
class TransformResult:
    value: complex | np.ndarray
    quad_error_estimate: float
    cross_check: float | None = None


# -- kernels ----------------------------------------------------------------------

def mu_kernel(bp: BoundaryPoint, z) -> float:
    """``(1/pi) Im(tau / (sigma - z))``, the normalized angle derivative."""
    d = bp.sigma - complex(z)
    if d == 0:
        raise SingularityError("kernel evaluated at its own boundary point")
    return (bp.tangent / d).imag / math.pi


def mu_kernel_limit(domain: ConvexDomain, t0: float) -> float:
    """Removable value of the kernel at coincidence: curvature over 2 pi."""
    return float(domain.curvature(t0)) / (2 * math.pi)


def mu_operator(bp: BoundaryPoint, A: MatrixOperator) -> np.ndarray:
    """Hermitian operator kernel ``(X - X*) / (2 pi i)`` with ``X = tau (sigma I - A)^{-1}``."""
    n = A.n
    try:
        r = np.linalg.solve(bp.sigma * np.eye(n) - A.entries, np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise SingularityError("boundary point is an eigenvalue") from exc
    x = bp.tangent * r
    return (x - x.conj().T) / _TWO_PI_I


# -- quadrature -------------------------------------------------------------------

class BoundaryQuadrature:
    """Composite Gauss-Legendre rule on the truncated parameter range ``[-m, m]``."""

    def __init__(self, domain, breaks, truncation_m, tail_bound, target_tol, focus=()):
        self.domain = domain
        self.breaks = np.asarray(breaks, dtype=float)
        self.truncation_m = float(truncation_m)
        self.tail_bound = float(tail_bound)
        self.target_tol = float(target_tol)
        self.focus = tuple(focus)
        a, b = self.breaks[:-1], self.breaks[1:]
        half = 0.5 * (b - a)
        t = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
        self.params = t.ravel()
        self.sigma, self.dsigma, _ = domain.curve(self.params)
        speed = np.abs(self.dsigma)
        self.tangent = self.dsigma / speed
        self.weights = (half[:, None] * _GL_W[None, :]).ravel() * speed

    @property
    def size(self) -> int:
        return self.params.size

    @property
    def nodes(self) -> list[BoundaryPoint]:
        return [BoundaryPoint(float(t), complex(s), complex(d))
                for t, s, d in zip(self.params, self.sigma, self.dsigma)]

    @cached_property
    def companion(self) -> "BoundaryQuadrature":
        """Rule on ``[-m/2, m/2]`` with every panel halved; used for error estimates."""
        m2 = 0.5 * self.truncation_m
        mids = 0.5 * (self.breaks[:-1] + self.breaks[1:])
        br = np.unique(np.concatenate([self.breaks, mids, [-m2, m2]]))
        br = br[(br >= -m2) & (br <= m2)]
        return BoundaryQuadrature(self.domain, br, m2, math.nan, self.target_tol, self.focus)

    def mu(self, z) -> np.ndarray:
        d = self.sigma - complex(z)
        if np.any(d == 0):
            raise SingularityError("evaluation point coincides with a quadrature node")
        return (self.tangent / d).imag / math.pi


def _focus_data(domain, pts, boundary_h):
    pts = np.atleast_1d(np.asarray(pts, dtype=complex))
    if pts.size == 0:
        return np.zeros(0), np.zeros(0)
    t, d = domain.nearest_param(pts)
    t, d = np.atleast_1d(t), np.atleast_1d(d)
    speed = np.abs(domain.curve(t)[1])
    h = np.where(d <= 1e-12 * (1 + np.abs(pts)), boundary_h, np.clip(d / speed, 1e-12, 0.25))
    return t, h


def _graded_breaks(m, anchors_t, anchors_h, max_panel=math.inf):
    """Split ``[-m, m]`` until each panel is no longer than its distance to every anchor."""
    inside = np.abs(anchors_t) < m
    cuts = np.unique(np.concatenate([[-m, m], anchors_t[inside]]))
    # anchors a few ulps apart would leave a zero-width panel whose nodes
    # round onto the anchor itself
    keep = np.diff(cuts) > 1e-13 * np.maximum(1.0, np.abs(cuts[1:]))
    cuts = np.concatenate([cuts[:-1][keep], [m]])
    at, ah = anchors_t, anchors_h
    out = []
    stack = [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)][::-1]
    while stack:
        a, b = stack.pop()
        length = b - a
        dist = np.maximum(np.maximum(a - at, at - b), 0.0)
        ok = length <= max_panel and np.all(length <= np.maximum(ah, dist))
        if ok or length <= 1e-13 * max(1.0, abs(a)):
            out.append(a)
            continue
        c = 0.5 * (a + b)
        stack.append((c, b))
        stack.append((a, c))
    out.append(m)
    return np.array(out)


def _cauchy_tail(domain, density, m):
    # for h ~ c / sigma^k the tail of int |h| |d sigma| / |sigma - z| is about |h(sigma(m))| / k
    s, _, _ = domain.curve(np.array([-m, m]))
    return float(np.sum(np.abs(density(s)))) / (2 * math.pi)


def build_quadrature(domain: ConvexDomain, focus, target_tol: float = 1e-8,
                     refine_near=(), m_cap: float = M_CAP, density=None) -> BoundaryQuadrature:
    """Truncated graded panel rule resolving every focus point.

    The truncation parameter doubles until the kernel tail mass outside
    ``[-m, m]`` is at most ``target_tol`` for every focus point.  When a
    ``density`` (a callable vanishing at infinity, e.g. the rational function
    fed to a Cauchy integral) is given, doubling continues until its
    asymptotic Cauchy tail is below ``target_tol`` as well: near the boundary
    the kernel mass decays much faster than ``h(sigma) d sigma / sigma``.
    Panels are graded geometrically toward each focus point's nearest
    boundary parameter and toward ``refine_near`` points such as poles.
    """
    focus = np.atleast_1d(np.asarray(focus, dtype=complex))
    if focus.size == 0:
        raise ValueError("focus must be nonempty")
    if not 1e-12 <= target_tol <= 1e-2:
        raise ValueError("target_tol must lie in [1e-12, 1e-2]")
    sd = domain.signed_distance(focus)
    if np.any(sd < -1e-12 * (1 + np.abs(focus))):
        raise DomainError("focus points must lie in the closed domain")
    ft, fh = _focus_data(domain, focus, BOUNDARY_FOCUS_H)
    rt, rh = _focus_data(domain, refine_near, BOUNDARY_FOCUS_H)
    on_bd = np.abs(sd) <= 1e-12 * (1 + np.abs(focus))

    m = max(1.0, 2.0 * float(np.max(np.abs(ft))))
    cap = min(m_cap, domain.max_param)
    while True:
        tail = float(np.max(domain.tail_mass(focus, m, on_bd, ft)))
        if density is not None and tail <= target_tol:
            tail = max(tail, _cauchy_tail(domain, density, m))
        if tail <= target_tol:
            break
        if 2 * m > cap:
            raise TruncationError(
                f"tail mass {tail:.3e} still above {target_tol:.1e} at m = {m:.3e}")
        m *= 2
    anchors_t = np.concatenate([[0.0], ft, rt])
    anchors_h = np.concatenate([[0.5], fh, rh])
    breaks = _graded_breaks(m, anchors_t, anchors_h, domain.max_panel)
    return BoundaryQuadrature(domain, breaks, m, tail, target_tol, focus)


def quadrature_for_matrix(domain, A: MatrixOperator, f: RationalFunction | None = None,
                          target_tol: float = 1e-8, n_focus: int = 32) -> BoundaryQuadrature:
    """Rule focused on numerical-range samples of ``A`` and graded toward poles of ``f``.

    Raises ``DomainError`` when a sample is not strictly inside the domain:
    the matrix Cauchy formulas need W(A) away from the boundary.
    """
    if A.n == 1:
        focus = A.entries.ravel()
    else:
        focus = numrange_boundary(A, max(n_focus, 8))
    if np.min(domain.signed_distance(focus)) <= 0:
        raise DomainError("numerical range of A is not inside the open domain")
    poles = f.pole_locations() if f is not None else ()
    return build_quadrature(domain, focus, target_tol, refine_near=poles, density=f)


# -- scalar transforms --------------------------------------------------------------

def _with_estimate(fn, quad):
    v = fn(quad)
    v2 = fn(quad.companion)
    return v, float(np.max(np.abs(np.asarray(v) - np.asarray(v2))))


def mass(quad: BoundaryQuadrature, z, on_boundary: bool = False) -> float:
    """Quadrature value of the kernel mass at ``z``."""
    z = complex(z)
    if not on_boundary and not bool(quad.domain.inside(z)):
        raise DomainError("interior mass requested for a point outside the domain")
    return float(np.sum(quad.weights * quad.mu(z)))


def cauchy_f_scalar(f: RationalFunction, quad: BoundaryQuadrature, z) -> TransformResult:
    """``(1/2 pi i) int f(sigma) d sigma / (sigma - z)``."""
    z = complex(z)

    def run(q):
        return complex(np.sum(q.weights * q.tangent * f.eval(q.sigma) / (q.sigma - z)) / _TWO_PI_I)

    v, err = _with_estimate(run, quad)
    return TransformResult(v, err)


def conj_cauchy_g(f: RationalFunction, quad: BoundaryQuadrature, z,
                  on_boundary: bool = False) -> TransformResult:
    """Cauchy transform of ``conj(f)``; boundary values by the kernel integral.

    In the interior the direct Cauchy sum is returned and the kernel form
    ``int conj(f) mu ds - conj(f(z))`` is reported as ``cross_check`` (the
    absolute difference of the two).
    """
    if not f.vanishes_at_infinity:
        raise ValueError("g requires f vanishing at infinity")
    z = complex(z)

    if on_boundary:
        def run(q):
            return complex(np.sum(q.weights * np.conj(f.eval(q.sigma)) * q.mu(z)))
        v, err = _with_estimate(run, quad)
        return TransformResult(v, err)

    def run(q):
        return complex(np.sum(q.weights * q.tangent * np.conj(f.eval(q.sigma)) / (q.sigma - z))
                       / _TWO_PI_I)

    v, err = _with_estimate(run, quad)
    alt = complex(np.sum(quad.weights * np.conj(f.eval(quad.sigma)) * quad.mu(z))) - np.conj(f.eval(z))
    return TransformResult(v, err, abs(v - alt))


def S_scalar(f: RationalFunction, quad: BoundaryQuadrature, z) -> TransformResult:
    """``int f(sigma) mu(sigma, z) ds``."""
    z = complex(z)

    def run(q):
        return complex(np.sum(q.weights * f.eval(q.sigma) * q.mu(z)))

    v, err = _with_estimate(run, quad)
    return TransformResult(v, err)


# -- matrix transforms --------------------------------------------------------------

def _chunks(total, n):
    size = max(1, (1 << 21) // (n * n))
    for start in range(0, total, size):
        yield slice(start, min(total, start + size))


def _resolvents(q, a, sl):
    n = a.shape[0]
    shifted = q.sigma[sl, None, None] * np.eye(n)[None] - a[None]
    eye = np.broadcast_to(np.eye(n, dtype=complex), shifted.shape)
    try:
        return np.linalg.solve(shifted, eye)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("a quadrature node is an eigenvalue of A") from exc


def _cauchy_sum(q, a, density):
    # (1/2 pi i) sum_i w_i tau_i h_i (sigma_i I - A)^{-1}
    n = a.shape[0]
    c = q.weights * q.tangent * density
    out = np.zeros((n, n), dtype=complex)
    for sl in _chunks(q.size, n):
        out += np.einsum("k,kij->ij", c[sl], _resolvents(q, a, sl))
    return out / _TWO_PI_I


def _kernel_sum(q, a, density):
    # sum_i w_i h_i mu(sigma_i, A)
    n = a.shape[0]
    out = np.zeros((n, n), dtype=complex)
    for sl in _chunks(q.size, n):
        x = q.tangent[sl, None, None] * _resolvents(q, a, sl)
        mu = (x - np.conj(np.swapaxes(x, 1, 2))) / _TWO_PI_I
        out += np.einsum("k,kij->ij", q.weights[sl] * density[sl], mu)
    return out


def _matrix_transform(fn, quad, A):
    v = fn(quad, A.entries)
    v2 = fn(quad.companion, A.entries)
    return TransformResult(v, float(np.linalg.norm(v - v2, 2)))


def cauchy_f_matrix(f: RationalFunction, quad: BoundaryQuadrature, A: MatrixOperator) -> TransformResult:
    """Quadrature realization of ``f(A)`` as a Cauchy integral (``f(inf)`` must be 0)."""
    if not f.vanishes_at_infinity:
        raise ValueError("the Cauchy formula requires f vanishing at infinity")
    return _matrix_transform(lambda q, a: _cauchy_sum(q, a, f.eval(q.sigma)), quad, A)


def g_matrix(f: RationalFunction, quad: BoundaryQuadrature, A: MatrixOperator) -> TransformResult:
    """``g(A)``: the Cauchy integral with density ``conj(f)``."""
    if not f.vanishes_at_infinity:
        raise ValueError("g requires f vanishing at infinity")
    return _matrix_transform(lambda q, a: _cauchy_sum(q, a, np.conj(f.eval(q.sigma))), quad, A)


def S_matrix(f: RationalFunction, quad: BoundaryQuadrature, A: MatrixOperator) -> TransformResult:
    """``S(f, A) = int f(sigma) mu(sigma, A) ds`` summed over Hermitian kernel matrices."""
    return _matrix_transform(lambda q, a: _kernel_sum(q, a, f.eval(q.sigma)), quad, A)
