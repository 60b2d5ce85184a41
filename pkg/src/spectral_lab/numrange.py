"""Numerical range support data, containment certificates and test ensembles."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .domains import ConvexDomain, HalfPlane

__all__ = [
    "MatrixOperator",
    "ContainmentCertificate",
    "GenerationError",
    "support_value",
    "numrange_boundary",
    "certify_containment",
    "random_matrix_in_domain",
    "ENSEMBLE_KINDS",
]

MAX_DIM = 512
ENSEMBLE_KINDS = ("ginibre", "jordan", "normal")


class GenerationError(RuntimeError):
    """Raised when an ensemble matrix cannot be placed inside a domain."""


class MatrixOperator:
    """Dense complex square matrix with lazily cached spectral data.

    Parameters
    ----------
    entries : array_like
        Square matrix, converted to ``complex128`` and frozen.
    """

    def __init__(self, entries):
        a = np.array(entries, dtype=complex)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError("MatrixOperator needs a nonempty square matrix")
        if a.shape[0] > MAX_DIM:
            raise ValueError(f"dimension {a.shape[0]} exceeds cap {MAX_DIM}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        a.setflags(write=False)
        self.entries = a
        self._eig = None
        self._support_cache: dict[float, float] = {}
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        if self._eig is None:
            self._eig = np.linalg.eigvals(self.entries)
        return self._eig

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2))

    def hermitian_part(self, theta: float = 0.0) -> np.ndarray:
        """``(e^{-i theta} A + e^{i theta} A*) / 2``."""
        b = np.exp(-1j * theta) * self.entries
        return 0.5 * (b + b.conj().T)

    def support(self, theta: float) -> float:
        theta = float(theta)
        with self._lock:
            if theta not in self._support_cache:
                h = self.hermitian_part(theta)
                self._support_cache[theta] = float(np.linalg.eigvalsh(h)[-1])
            return self._support_cache[theta]

    def is_normal(self, tol: float = 1e-10) -> bool:
        a = self.entries
        c = a @ a.conj().T - a.conj().T @ a
        return float(np.linalg.norm(c)) <= tol * max(1.0, self.norm) ** 2

    def __repr__(self):
        return f"MatrixOperator(n={self.n})"


def support_value(A: MatrixOperator, theta: float) -> float:
    """Support function of W(A) in the direction ``e^{i theta}``."""
    return A.support(theta)


def _boundary_samples(entries: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    rot = np.exp(-1j * thetas)[:, None, None] * entries[None]
    herm = 0.5 * (rot + np.conj(np.swapaxes(rot, 1, 2)))
    _, vecs = np.linalg.eigh(herm)
    v = vecs[:, :, -1]
    av = np.einsum("ij,kj->ki", entries, v)
    return np.einsum("ki,ki->k", np.conj(v), av) / np.einsum("ki,ki->k", np.conj(v), v)


def numrange_boundary(A: MatrixOperator, n_angles: int = 256, return_angles: bool = False):
    """Rayleigh quotients of the maximizing eigenvectors on a uniform angle grid.

    Each returned point lies in W(A) exactly and touches the supporting line
    at its angle.
    """
    if n_angles < 8:
        raise ValueError("n_angles must be at least 8")
    thetas = 2 * math.pi * np.arange(n_angles) / n_angles
    pts = _boundary_samples(A.entries, thetas)
    if return_angles:
        return pts, thetas
    return pts


@dataclass
class ContainmentCertificate:
    contained: bool
    margin: float
    probes: list = field(default_factory=list)


def _halfplane_margin(A: MatrixOperator) -> float:
    return float(np.linalg.eigvalsh(A.hermitian_part(0.0))[0])


def certify_containment(
    A: MatrixOperator, domain: ConvexDomain, n_angles: int = 256, refine: bool = True
) -> ContainmentCertificate:
    """Check ``closure(W(A))`` lies in ``domain`` and report the clearance.

    For the half-plane the clearance ``lambda_min(Re A)`` is exact.  For the
    curved domains the distance-to-boundary function is concave on the
    domain, so its minimum over the convex set W(A) sits on the boundary of
    W(A); that boundary is sampled and the worst sample is polished by a
    golden-section search in the angle.
    """
    if n_angles < 16:
        raise ValueError("n_angles must be at least 16")
    hp = _halfplane_margin(A)
    if isinstance(domain, HalfPlane):
        return ContainmentCertificate(hp > 0, hp, [(0.0, complex(hp))])
    pts, thetas = numrange_boundary(A, n_angles, return_angles=True)
    dist = domain.signed_distance(pts)
    k = int(np.argmin(dist))
    margin = float(dist[k])
    if refine and A.n > 1:
        h = 2 * math.pi / n_angles

        def objective(th):
            z = _boundary_samples(A.entries, np.array([th]))
            return float(domain.signed_distance(z)[0])

        th_best, val = _golden_min(objective, thetas[k] - h, thetas[k] + h)
        if val < margin:
            margin = val
    margin = min(margin, hp) if hp <= 0 else margin
    probes = list(zip(thetas.tolist(), pts.tolist()))
    return ContainmentCertificate(bool(margin > 0 and hp > 0), margin, probes)


def _golden_min(fun, a, b, tol=1e-10, maxiter=100):
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(maxiter):
        if abs(b - a) < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return (c, fc) if fc < fd else (d, fd)


# -- ensembles ----------------------------------------------------------------

def _complex_gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def _base_matrix(kind: str, n: int, rng) -> np.ndarray:
    if kind == "ginibre":
        g = _complex_gaussian(rng, (n, n))
        return g / max(np.linalg.norm(g, 2), 1e-300)
    if kind == "jordan":
        lam = 1j * rng.standard_normal()
        scale = rng.uniform(0.5, 2.0)
        return lam * np.eye(n) + scale * np.eye(n, k=1)
    if kind == "normal":
        w = _complex_gaussian(rng, n)
        q, r = np.linalg.qr(_complex_gaussian(rng, (n, n)))
        q = q * (np.diag(r) / np.abs(np.diag(r)))
        return (q * w) @ q.conj().T
    raise ValueError(f"unknown ensemble kind {kind!r}")


def _shift_margin(domain, pts, hp, s):
    if isinstance(domain, HalfPlane):
        return hp + s
    return float(np.min(domain.signed_distance(pts + s)))


def random_matrix_in_domain(
    domain: ConvexDomain,
    n: int,
    margin: float,
    seed: int,
    kind: str = "ginibre",
    n_angles: int = 256,
) -> MatrixOperator:
    """Seeded matrix whose numerical range has clearance in ``[margin, 2 margin]``.

    A base matrix of the requested ensemble is drawn and then shifted along
    the positive real axis; the shift is found by bisection on the clearance,
    which is nondecreasing in the shift because every domain here is closed
    under positive real translations.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not margin > 0:
        raise ValueError("margin must be positive")
    rng = np.random.default_rng(seed)
    base = _base_matrix(kind, n, rng)
    B = MatrixOperator(base)
    pts = numrange_boundary(B, n_angles) if n > 1 else np.array([base[0, 0]])
    hp = _halfplane_margin(B)
    target = 1.5 * margin

    def clearance(s):
        return _shift_margin(domain, pts, hp, s)

    lo, hi = -1.0, 1.0
    step = 1.0
    while clearance(lo) >= margin:
        step *= 2
        lo -= step
        if step > 1e12:
            raise GenerationError("could not bracket the shift from below")
    step = 1.0
    while clearance(hi) < target:
        step *= 2
        hi += step
        if step > 1e12:
            raise GenerationError("could not bracket the shift from above")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        c = clearance(mid)
        if margin * 1.05 <= c <= margin * 1.95:
            A = MatrixOperator(base + mid * np.eye(n))
            cert = certify_containment(A, domain, n_angles)
            if margin <= cert.margin <= 2 * margin:
                return A
            # sampled and refined clearances disagree; steer with the refined one
            c = cert.margin
        if c < target:
            lo = mid
        else:
            hi = mid
    raise GenerationError("bisection for the shift did not converge in 200 iterations")
