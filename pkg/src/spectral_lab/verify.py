"""The constant K(alpha), the quartic, and the numerical checks of every bound.

Margins are signed: a bound ``value <= bound`` is reported as
``bound - value`` so that negative numbers mean a violation.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .domains import ConvexDomain
from .numrange import MatrixOperator, certify_containment, random_matrix_in_domain
from .rational import (
    RationalFunction,
    eval_matrix_direct,
    mobius_damp,
    regularize_matrix,
    sup_norm,
)
from .transforms import (
    S_matrix,
    build_quadrature,
    conj_cauchy_g,
    g_matrix,
    quadrature_for_matrix,
)

__all__ = [
    "k_of_alpha",
    "quartic_residual",
    "verify_lemma1",
    "verify_lemma2",
    "verify_schwenninger",
    "verify_main_bound",
    "verify_regularization",
    "RegularizationFit",
    "TrialRecord",
    "BoundReport",
    "run_campaign",
    "CertificationError",
]


class CertificationError(RuntimeError):
    """The matrix's numerical range is not certified inside the domain."""


def k_of_alpha(alpha: float) -> float:
    """``1 - alpha/pi + sqrt(2 - 4 alpha/pi + alpha^2/pi^2)``."""
    if not 0.0 <= alpha <= math.pi / 2 + 1e-15:
        raise ValueError("alpha must lie in [0, pi/2]")
    r = alpha / math.pi
    return 1.0 - r + math.sqrt(2.0 - 4.0 * r + r * r)


def quartic_residual(C: float, alpha: float) -> float:
    """``C^4 - (2 - 2a/pi) C^3 - (1 - 2a/pi) C^2``; zero at ``C = K(alpha)``."""
    if C < 0:
        raise ValueError("C must be nonnegative")
    r = 2.0 * alpha / math.pi
    return C**4 - (2.0 - r) * C**3 - (1.0 - r) * C**2


# -- helpers ----------------------------------------------------------------------

def _vanishing(f: RationalFunction, eps: float) -> RationalFunction:
    return f if f.vanishes_at_infinity else mobius_damp(f, eps)


def _normalized(f: RationalFunction, domain: ConvexDomain):
    """``(f / ||f||_inf, ||f||_inf)``; the zero function is returned unchanged."""
    s = sup_norm(f, domain)
    if s == 0:
        return f, 0.0
    return f.scaled(1.0 / s), s


def _require_contained(A, domain, n_angles=256):
    cert = certify_containment(A, domain, n_angles)
    if not cert.contained:
        raise CertificationError(f"W(A) not inside the domain (margin {cert.margin:.3e})")
    return cert


def lemma1_samples(f: RationalFunction, domain: ConvexDomain, n: int) -> np.ndarray:
    """Boundary parameters for probing ``|g|``: a uniform spread plus pole footprints."""
    locs = f.pole_locations()
    tp = np.atleast_1d(domain.nearest_param(locs)[0]) if locs.size else np.zeros(0)
    span = max(3.0, 1.5 * float(np.max(np.abs(tp), initial=0.0)))
    base = np.linspace(-span, span, max(n - 3 * tp.size, 4))
    near = [tp + d for d in (-0.1, 0.0, 0.1)] if tp.size else []
    t = np.unique(np.concatenate([base, *near]))
    return t[np.abs(t) < min(domain.max_param, 1e12)]


# -- bound checks -------------------------------------------------------------------

def verify_lemma1(f: RationalFunction, domain: ConvexDomain, n_boundary_samples: int = 32,
                  target_tol: float = 1e-8, return_max: bool = False,
                  interior_depths=(0.05, 0.5)):
    """Margin ``1 - 2 alpha/pi - max |g|`` over sample points, for ``f / ||f||_inf``.

    On the boundary ``g`` is the kernel integral of ``conj(f)``; by the
    maximum principle that supremum bounds the interior.  Interior points at
    the given depths along the inward normal are probed as well, through the
    Cauchy integral itself (on the half-plane the kernel vanishes along the
    boundary, so only the interior samples exercise the quadrature there).
    """
    if not f.vanishes_at_infinity:
        raise ValueError("f must vanish at infinity")
    bound = domain.expected_mass(on_boundary=True)
    fn, s = _normalized(f, domain)
    if s == 0:
        return (bound, 0.0) if return_max else bound
    poles = fn.pole_locations()
    gmax = 0.0
    for t0 in lemma1_samples(fn, domain, n_boundary_samples):
        bp = domain.boundary_point(t0)
        quad = build_quadrature(domain, [bp.sigma], target_tol, refine_near=poles)
        gmax = max(gmax, abs(conj_cauchy_g(fn, quad, bp.sigma, on_boundary=True).value))
        for depth in interior_depths:
            z = bp.sigma + depth * 1j * bp.tangent
            quad = build_quadrature(domain, [z], target_tol, refine_near=poles, density=fn)
            gmax = max(gmax, abs(conj_cauchy_g(fn, quad, z).value))
    return (bound - gmax, gmax) if return_max else bound - gmax


def verify_lemma2(f: RationalFunction, A: MatrixOperator, domain: ConvexDomain, quad=None,
                  target_tol: float = 1e-8) -> float:
    """Margin ``2 - 2 alpha/pi - ||S(f, A)||`` for ``f / ||f||_inf``."""
    if not f.vanishes_at_infinity:
        raise ValueError("f must vanish at infinity")
    bound = domain.expected_mass()
    fn, s = _normalized(f, domain)
    if s == 0:
        return bound
    _require_contained(A, domain)
    quad = quad or quadrature_for_matrix(domain, A, fn, target_tol)
    S = S_matrix(fn, quad, A).value
    return bound - float(np.linalg.norm(S, 2))


def verify_schwenninger(f: RationalFunction, A: MatrixOperator, domain: ConvexDomain, quad=None,
                        target_tol: float = 1e-8, return_parts: bool = False):
    """Relative residual of ``(F*F)^2 = F*F S* F - F*F G F`` with ``F = f(A)`` exact.

    ``S`` and ``G`` come from the boundary quadrature; the adjoint residual
    ``||S* - F* - G||`` is returned alongside when ``return_parts`` is set.
    """
    if not f.vanishes_at_infinity:
        raise ValueError("f must vanish at infinity")
    fn, s = _normalized(f, domain)
    if s == 0:
        return (0.0, 0.0, 0.0) if return_parts else 0.0
    _require_contained(A, domain)
    quad = quad or quadrature_for_matrix(domain, A, fn, target_tol)
    F = eval_matrix_direct(fn, A)
    Sr = S_matrix(fn, quad, A)
    Gr = g_matrix(fn, quad, A)
    S, G = Sr.value, Gr.value
    P = F.conj().T @ F
    lhs = P @ P
    rhs = P @ S.conj().T @ F - P @ G @ F
    nf = float(np.linalg.norm(F, 2))
    res = float(np.linalg.norm(lhs - rhs, 2)) / max(1.0, nf**4)
    if not return_parts:
        return res
    adj = float(np.linalg.norm(S.conj().T - F.conj().T - G, 2))
    return res, adj, max(Sr.quad_error_estimate, Gr.quad_error_estimate)


def verify_main_bound(f: RationalFunction, A: MatrixOperator, domain: ConvexDomain,
                      sup: float | None = None, certify: bool = True) -> float:
    """``||f(A)|| / ||f||_inf`` with ``f(A)`` from the direct partial-fraction path.

    Functions with ``f(inf) != 0`` need no damping here: the direct path is
    exact for them and the ratio uses the undamped sup norm.
    """
    if certify:
        _require_contained(A, domain)
    s = sup_norm(f, domain) if sup is None else sup
    if s == 0:
        raise ZeroDivisionError("ratio undefined for f = 0")
    return float(np.linalg.norm(eval_matrix_direct(f, A), 2)) / s


def _numrange_distance(A: MatrixOperator, p: complex, n_angles: int = 256) -> float:
    """Lower bound on ``dist(p, W(A))``: best separating support line on an angle grid."""
    th = 2 * math.pi * np.arange(n_angles) / n_angles
    rot = np.exp(-1j * th)[:, None, None] * A.entries[None]
    h = np.linalg.eigvalsh(0.5 * (rot + np.conj(np.swapaxes(rot, 1, 2))))[:, -1]
    d = float(np.max((np.exp(-1j * th) * p).real - h))
    if not d > 0:
        raise ValueError("pole is not separated from the numerical range")
    return d


@dataclass
class RegularizationFit:
    slope: float
    errors: list
    bounds: list
    identity_residual: float

    @property
    def bound_ok(self) -> bool:
        return all(e <= b * (1 + 1e-9) + 1e-15 for e, b in zip(self.errors, self.bounds))


def verify_regularization(f: RationalFunction, A: MatrixOperator, domain: ConvexDomain,
                          eps_list=None) -> RegularizationFit:
    """Fit ``||f(A_eps) - f(A)|| ~ C eps`` on a log-log scale.

    ``f`` must be ``c / (z - p)`` with a single simple pole ``p`` outside the
    closed domain.  Each error is also checked against the a priori bound
    ``|c| eps (1 + |p|/d_A)(1 + |p|/d_eps)`` from ``||(pI - B)^{-1}|| <= 1/d``
    for ``d`` at most the distance from ``p`` to W(B), and the exact difference
    identity ``r(A_eps) - r(A) = eps A_eps r(A_eps) A r(A)`` for
    ``r(z) = (z - p)^{-1}`` is checked to rounding (with ``(p - z)^{-1}``
    the right side changes sign).

    The distances are support-function lower bounds for W(A) and W(A_eps)
    rather than the distance to the domain: W(A_eps) stays inside the domain
    only when the domain is closed under scaling toward 0 (half-plane,
    parabola), which a hyperbola with vertex at ``a > 0`` is not.
    """
    if len(f.poles) != 1 or f.poles[0][1] != 1 or not f.vanishes_at_infinity:
        raise ValueError("regularization check needs f = c/(z - p) with one simple pole")
    eps_list = [2.0**-k for k in range(1, 11)] if eps_list is None else list(eps_list)
    p = f.poles[0][0]
    c = f.terms[0][0]
    d_A = _numrange_distance(A, p)
    fA = eval_matrix_direct(f, A)
    r = RationalFunction.resolvent(p)
    rA = eval_matrix_direct(r, A)
    a = A.entries
    errors, bounds, ident = [], [], 0.0
    for eps in eps_list:
        Ae = regularize_matrix(A, eps)
        errors.append(float(np.linalg.norm(eval_matrix_direct(f, Ae) - fA, 2)))
        d_e = _numrange_distance(Ae, p)
        bounds.append(abs(c) * eps * (1 + abs(p) / d_A) * (1 + abs(p) / d_e))
        rAe = eval_matrix_direct(r, Ae)
        lhs = rAe - rA
        rhs = eps * Ae.entries @ rAe @ a @ rA
        ident = max(ident, float(np.linalg.norm(lhs - rhs, 2)) / max(1e-300, float(np.linalg.norm(lhs, 2))))
    slope = math.nan
    if len(eps_list) > 1:
        slope = float(np.polyfit(np.log(eps_list), np.log(errors), 1)[0])
    return RegularizationFit(slope, errors, bounds, ident)


# -- campaign -------------------------------------------------------------------------

@dataclass
class TrialRecord:
    trial_id: int
    seed: int
    domain_kind: str
    alpha: float
    n: int
    ensemble: str
    function_id: str
    sup_norm_f: float = math.nan
    norm_fA: float = math.nan
    ratio: float = math.nan
    k_alpha: float = math.nan
    ratio_over_k: float = math.nan
    lemma1_margin: float = math.nan
    lemma2_margin: float = math.nan
    schwenninger_residual: float = math.nan
    adjoint_residual: float = math.nan
    quad_error: float = math.nan
    domain_index: int = 0
    error: str = ""


@dataclass
class BoundReport:
    domains: list = field(default_factory=list)
    trials: list = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)
    worst: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "domains": self.domains,
            "aggregate": self.aggregate,
            "worst": self.worst,
            "trials": [asdict(t) for t in self.trials],
        }


def _fold(trials, slack, ratio_slack):
    ok = [t for t in trials if not t.error]

    def mx(key):
        vals = [getattr(t, key) for t in ok]
        return max(vals) if vals else None

    def mn(key):
        vals = [getattr(t, key) for t in ok]
        return min(vals) if vals else None

    return {
        "trials": len(trials),
        "failures": sum(1 for t in trials if t.error),
        "violations": sum(1 for t in trials if _violates(t, slack, ratio_slack)),
        "max_ratio": mx("ratio"),
        "max_ratio_over_k": mx("ratio_over_k"),
        "min_margin_lemma1": mn("lemma1_margin"),
        "min_margin_lemma2": mn("lemma2_margin"),
        "max_schwenninger_residual": mx("schwenninger_residual"),
        "max_adjoint_residual": mx("adjoint_residual"),
        "max_quad_error": mx("quad_error"),
    }


def _violates(t: TrialRecord, slack: float, ratio_slack: float) -> bool:
    if t.error:
        return False
    return (
        t.lemma1_margin < -slack
        or t.lemma2_margin < -slack
        or t.schwenninger_residual > slack
        or t.adjoint_residual > slack
        or t.ratio_over_k > 1.0 + ratio_slack
    )


def _run_matrix_job(job):
    """All function trials for one sampled matrix; top level so it pickles."""
    (domain, d_idx, kind, n, margin, seed, funcs, tol, n_angles, first_id) = job
    alpha = domain.alpha
    k = k_of_alpha(alpha)
    records = []
    try:
        A = random_matrix_in_domain(domain, n, margin, seed, kind, n_angles)
        _require_contained(A, domain, n_angles)
    except Exception as exc:  # recorded, the campaign continues
        for j, fd in enumerate(funcs):
            records.append(TrialRecord(first_id + j, seed, domain.kind, alpha, n, kind, fd["id"],
                                       k_alpha=k, domain_index=d_idx,
                                       error=f"{type(exc).__name__}: {exc}"))
        return records
    for j, fd in enumerate(funcs):
        rec = TrialRecord(first_id + j, seed, domain.kind, alpha, n, kind, fd["id"],
                          k_alpha=k, domain_index=d_idx)
        try:
            if fd["error"]:
                raise RuntimeError(fd["error"])
            f, fn = fd["f"], fd["fn"]
            rec.sup_norm_f = fd["sup_f"]
            rec.norm_fA = float(np.linalg.norm(eval_matrix_direct(f, A), 2))
            rec.ratio = rec.norm_fA / rec.sup_norm_f
            rec.ratio_over_k = rec.ratio / k
            rec.lemma1_margin = fd["lemma1_margin"]
            quad = quadrature_for_matrix(domain, A, fn, tol)
            S = S_matrix(fn, quad, A)
            G = g_matrix(fn, quad, A)
            F = eval_matrix_direct(fn, A)
            rec.lemma2_margin = domain.expected_mass() - float(np.linalg.norm(S.value, 2))
            P = F.conj().T @ F
            resid = P @ P - P @ S.value.conj().T @ F + P @ G.value @ F
            rec.schwenninger_residual = float(np.linalg.norm(resid, 2)) / max(
                1.0, float(np.linalg.norm(F, 2)) ** 4)
            rec.adjoint_residual = float(np.linalg.norm(S.value.conj().T - F.conj().T - G.value, 2))
            rec.quad_error = max(S.quad_error_estimate, G.quad_error_estimate)
        except Exception as exc:
            rec.error = f"{type(exc).__name__}: {exc}"
        records.append(rec)
    return records


def _thread_count(threads):
    if threads is None:
        threads = int(os.environ.get("SPECTRAL_LAB_THREADS", "1") or 1)
    return max(1, int(threads))


def _matrix_seed(master, d_idx, e_idx, i):
    return int(np.random.SeedSequence([master, d_idx, e_idx, i]).generate_state(1)[0])


def run_campaign(config, threads: int | None = None) -> BoundReport:
    """Run every check over domains x ensembles x seeds x function templates.

    Trials are grouped per sampled matrix and mapped over a process pool;
    the reduction follows trial index order, so the report does not depend
    on the number of workers.
    """
    tol = config.quad_tol
    slack = config.bound_slack_factor * tol
    report = BoundReport()
    jobs = []
    next_id = 0
    for d_idx, domain in enumerate(config.domain_objects()):
        funcs = []
        for tmpl in config.functions:
            entry = {"id": tmpl.get("id", f"f{len(funcs)}"), "error": ""}
            try:
                f = RationalFunction.from_dict(tmpl)
                fv = _vanishing(f, config.damping_eps)
                entry.update(f=f, fn=_normalized(fv, domain)[0], sup_f=sup_norm(f, domain),
                             lemma1_margin=verify_lemma1(fv, domain, config.lemma1_samples, tol))
            except Exception as exc:  # every trial with this function is marked failed
                entry["error"] = f"{type(exc).__name__}: {exc}"
            funcs.append(entry)
        report.domains.append({
            "descriptor": domain.to_dict(),
            "alpha": domain.alpha,
            "k_alpha": k_of_alpha(domain.alpha),
        })
        for e_idx, ens in enumerate(config.ensembles):
            for i in range(ens["count"]):
                seed = _matrix_seed(config.seed, d_idx, e_idx, i)
                jobs.append((domain, d_idx, ens["kind"], ens["n"], ens["margin"], seed, funcs,
                             tol, config.n_angles, next_id))
                next_id += len(funcs)
    workers = _thread_count(threads)
    if workers == 1 or len(jobs) <= 1:
        results = [_run_matrix_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_matrix_job, jobs, chunksize=4))
    report.trials = [r for batch in results for r in batch]
    report.aggregate = _fold(report.trials, slack, config.ratio_slack)
    for d_idx, entry in enumerate(report.domains):
        entry["aggregate"] = _fold([t for t in report.trials if t.domain_index == d_idx],
                                   slack, config.ratio_slack)
    ok = [t for t in report.trials if not t.error]
    if ok:
        worst = max(ok, key=lambda t: t.ratio_over_k)
        report.worst = {"trial_id": worst.trial_id, "seed": worst.seed,
                        "domain_index": worst.domain_index, "ensemble": worst.ensemble,
                        "n": worst.n, "ratio_over_k": worst.ratio_over_k}
    return report
