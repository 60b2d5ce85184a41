import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectral_lab import (BoundaryPoint, DomainError, HalfPlane, Hyperbola, MatrixOperator,
                          Parabola, RationalFunction, S_matrix, S_scalar, SingularityError,
                          TruncationError, build_quadrature, cauchy_f_matrix,
                          certify_containment, conj_cauchy_g, eval_matrix_direct, g_matrix,
                          mass, mu_kernel, mu_operator, quadrature_for_matrix,
                          random_matrix_in_domain, sector_approx, sup_norm)
from spectral_lab.transforms import BoundaryQuadrature, mu_kernel_limit
from spectral_lab.verify import k_of_alpha

from conftest import DOMAINS, interior_points, random_rational

RES = RationalFunction.resolvent(-1.0)
RES2 = RationalFunction.resolvent(-1.0, order=2)
H = Hyperbola(1.0, 1.0)
TOL = 1e-8
FAMILIES = dict(DOMAINS, sector=sector_approx(math.pi / 3))


def _normalized(f, domain):
    return f.scaled(1.0 / sup_norm(f, domain))


# -- kernels ---------------------------------------------------------------------------

def test_mu_kernel_examples():
    hp = HalfPlane()
    bp = hp.boundary_point(0.0)
    assert mu_kernel(bp, 1.0) == pytest.approx(1 / math.pi, abs=1e-16)
    assert mu_kernel(bp, -2j) == 0.0
    for s in (0.3, 1.0, 7.5):
        assert mu_kernel(hp.boundary_point(s), 1.0) == pytest.approx(
            mu_kernel(hp.boundary_point(-s), 1.0), abs=1e-16)
        # Poisson kernel x / (pi (x^2 + (y - s)^2)) at x = 1, y = 0
        assert mu_kernel(hp.boundary_point(s), 1.0) == pytest.approx(
            1 / (math.pi * (1 + s * s)), rel=1e-14)
    with pytest.raises(SingularityError):
        mu_kernel(bp, 0.0)


def test_mu_kernel_limit_is_curvature():
    bp = H.boundary_point(0.0)
    eps = 1e-5
    near = mu_kernel(H.boundary_point(eps), bp.sigma)
    assert mu_kernel_limit(H, 0.0) == pytest.approx(1 / (2 * math.pi), rel=1e-14)
    assert near == pytest.approx(mu_kernel_limit(H, 0.0), rel=1e-4)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_kernel_positivity(name):
    domain = FAMILIES[name]
    r = np.random.default_rng(3)
    ts = r.uniform(-6, 6, 10_000)
    zs = interior_points(domain, r, 10_000, depth=(1e-3, 5.0), span=6.0)
    s, ds, _ = domain.curve(ts)
    ok = zs[domain.inside(zs)]
    vals = [mu_kernel(BoundaryPoint(t, a, b), z) for t, a, b, z in zip(ts, s, ds, ok)]
    assert len(vals) > 9000
    assert min(vals) > 0


def test_mu_operator_examples():
    hp = HalfPlane()
    bp = hp.boundary_point(0.0)
    assert np.allclose(mu_operator(bp, MatrixOperator([[1.0]])), [[1 / math.pi]], atol=1e-16)
    D = MatrixOperator(np.diag([1.0, 2 + 1j]))
    bp = hp.boundary_point(0.4)
    ref = np.diag([mu_kernel(bp, 1.0), mu_kernel(bp, 2 + 1j)])
    assert np.allclose(mu_operator(bp, D), ref, atol=1e-15)


def test_mu_operator_hermitian_positive():
    A = random_matrix_in_domain(H, 6, 0.1, 5)
    assert certify_containment(A, H).contained
    r = np.random.default_rng(6)
    for t in r.uniform(-5, 5, 1000):
        M = mu_operator(H.boundary_point(t), A)
        assert np.max(np.abs(M - M.conj().T)) <= 1e-12 * max(1.0, np.max(np.abs(M)))
        assert np.linalg.eigvalsh(M)[0] > 0


# -- quadrature -------------------------------------------------------------------------

def test_quadrature_halfplane_example():
    q = build_quadrature(HalfPlane(), [1.0], 1e-6)
    need = math.tan((math.pi - math.pi * 1e-6) / 2)
    assert need <= q.truncation_m < 2 * need
    assert abs(mass(q, 1.0) - 1.0) < 1e-5


def test_quadrature_hyperbola_example():
    q = build_quadrature(H, [2.0], 1e-8)
    assert abs(mass(q, 2.0) - 1.5) < 1e-7


def test_quadrature_structure(domain):
    q = build_quadrature(domain, [1.5 + 0.5j, 3.0], TOL)
    assert np.all(q.weights > 0)
    assert np.all(np.diff(q.params) > 0)
    assert q.breaks[0] == -q.truncation_m and q.breaks[-1] == q.truncation_m
    assert np.all(np.diff(q.breaks) > 0)
    assert q.tail_bound <= q.target_tol
    assert q.size == 16 * (len(q.breaks) - 1)
    assert len(q.nodes) == q.size
    for z in q.focus:
        assert abs(mass(q, z) - domain.expected_mass()) < 10 * TOL


def test_quadrature_monotone_in_tol(domain):
    prev = None
    for tol in (1e-4, 5e-5, 2.5e-5, 1.25e-5, 1e-6, 5e-7, 1e-8, 5e-9):
        q = build_quadrature(domain, [2.0 + 1j], tol)
        if prev is not None:
            assert q.truncation_m >= prev.truncation_m
            assert q.size >= prev.size
        prev = q


def test_quadrature_errors():
    with pytest.raises(ValueError):
        build_quadrature(H, [], TOL)
    with pytest.raises(ValueError):
        build_quadrature(H, [2.0], 1e-13)
    with pytest.raises(ValueError):
        build_quadrature(H, [2.0], 0.1)
    with pytest.raises(DomainError):
        build_quadrature(H, [0.5], TOL)
    with pytest.raises(TruncationError):
        build_quadrature(HalfPlane(), [1.0], 1e-8, m_cap=1e3)


def test_mass_examples():
    assert mass(build_quadrature(HalfPlane(), [1.0], TOL), 1.0) == pytest.approx(1.0, abs=1e-7)
    q = build_quadrature(H, [1.0], TOL)
    # scipy quad of the kernel around the vertex: 0.5000000000000114
    assert mass(q, 1.0, on_boundary=True) == pytest.approx(0.5, abs=1e-7)
    q = build_quadrature(Parabola(1.0), [2.0], TOL)
    # scipy quad over the whole line: 2.000000000000034
    assert mass(q, 2.0) == pytest.approx(2.0, abs=1e-7)
    with pytest.raises(DomainError):
        mass(q, -1.0)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_mass_identities(name):
    domain = FAMILIES[name]
    r = np.random.default_rng(7)
    for z in interior_points(domain, r, 10, depth=(0.01, 3.0)):
        q = build_quadrature(domain, [z], TOL)
        assert abs(mass(q, z) - domain.expected_mass(False)) < 10 * TOL
    for t in r.uniform(-3, 3, 10):
        z = domain.boundary_point(t).sigma
        q = build_quadrature(domain, [z], TOL)
        assert abs(mass(q, z, True) - domain.expected_mass(True)) < 10 * TOL


def test_convergence_order():
    # fixed truncation, uniform panels halved; reference at 1/64
    m = 8.0
    cases = [(H, 1.05), (Parabola(1.0), 0.3 + 0.2j), (HalfPlane(), 0.3)]
    for domain, z in cases:
        def rule(h):
            return BoundaryQuadrature(domain, np.arange(-m, m + h / 2, h), m, 0.0, TOL)
        ref = mass(rule(1 / 64), z)
        errs = [abs(mass(rule(h), z) - ref) for h in (4.0, 2.0, 1.0)]
        assert errs[0] >= 4 * errs[1]
        assert errs[1] >= 4 * errs[2]


def test_companion_estimate_finite(domain):
    q = build_quadrature(domain, [2.0 + 0.5j], TOL)
    for res in (S_scalar(RES, q, 2 + 0.5j), conj_cauchy_g(RES, q, 2 + 0.5j)):
        assert math.isfinite(res.quad_error_estimate)
    c = q.companion
    assert c.truncation_m == 0.5 * q.truncation_m
    assert c.size > 0


# -- matrix Cauchy transform ------------------------------------------------------------

def test_cauchy_f_matrix_examples():
    A = MatrixOperator([[1.0]])
    q = quadrature_for_matrix(HalfPlane(), A, RES)
    assert abs(cauchy_f_matrix(RES, q, A).value[0, 0] - 0.5) < 1e-6
    # diag(1, 2) has an eigenvalue on the vertex of the hyperbola
    with pytest.raises(DomainError):
        quadrature_for_matrix(H, MatrixOperator(np.diag([1.0, 2.0])), RES2)
    D = MatrixOperator(np.diag([1.25, 2.0]))
    q = quadrature_for_matrix(H, D, RES2)
    val = cauchy_f_matrix(RES2, q, D).value
    assert np.allclose(val, np.diag([1 / 2.25**2, 1 / 9]), atol=1e-8)
    with pytest.raises(ValueError):
        cauchy_f_matrix(RationalFunction.mobius(1, -1, 1, 1), q, D)


@pytest.mark.parametrize("kind", ["ginibre", "jordan", "normal"])
def test_oracle_equivalence(domain, kind):
    r = np.random.default_rng(11)
    for seed in range(4):
        f = random_rational(r)
        A = random_matrix_in_domain(domain, 8, 0.1, seed, kind)
        q = quadrature_for_matrix(domain, A, f, TOL)
        ref = eval_matrix_direct(f, A)
        got = cauchy_f_matrix(f, q, A).value
        assert np.linalg.norm(got - ref, 2) <= 1e-6 * np.linalg.norm(ref, 2)


# -- g ----------------------------------------------------------------------------------

def test_g_zero_on_halfplane():
    hp = HalfPlane()
    r = np.random.default_rng(12)
    for _ in range(5):
        f = _normalized(random_rational(r), hp)
        for z in interior_points(hp, r, 4, depth=(0.05, 3.0)):
            q = build_quadrature(hp, [z], TOL, refine_near=f.pole_locations(), density=f)
            res = conj_cauchy_g(f, q, z)
            assert abs(res.value) < 1e-6
            assert res.cross_check < 1e-6
        bz = hp.boundary_point(r.uniform(-3, 3)).sigma
        q = build_quadrature(hp, [bz], TOL, refine_near=f.pole_locations())
        assert abs(conj_cauchy_g(f, q, bz, on_boundary=True).value) < 1e-12


def test_g_hyperbola_value():
    q = build_quadrature(H, [2.0], TOL, refine_near=[-1.0], density=RES)
    res = conj_cauchy_g(RES, q, 2.0)
    # scipy quad of the kernel form on |t| < 60
    assert res.value == pytest.approx(0.13225250350389367, abs=1e-8)
    assert abs(res.value) <= 0.5 + 1e-6
    assert res.cross_check < 1e-8


def test_g_reflection_symmetry():
    for z in (2 + 1j, 1.5 - 0.3j, 4 + 3j):
        q = build_quadrature(H, [z, np.conj(z)], TOL, refine_near=[-1.0], density=RES)
        g1 = conj_cauchy_g(RES, q, z).value
        g2 = conj_cauchy_g(RES, q, np.conj(z)).value
        assert abs(g2 - np.conj(g1)) < 1e-10


def test_g_requires_vanishing():
    q = build_quadrature(H, [2.0], TOL)
    with pytest.raises(ValueError):
        conj_cauchy_g(RationalFunction.constant(1.0), q, 2.0)
    with pytest.raises(ValueError):
        g_matrix(RationalFunction.constant(1.0), q, MatrixOperator([[2.0]]))


def test_g_matrix_halfplane_vanishes():
    hp = HalfPlane()
    r = np.random.default_rng(13)
    for seed in range(6):
        f = _normalized(random_rational(r), hp)
        A = random_matrix_in_domain(hp, 6, 0.1, seed, ("ginibre", "jordan", "normal")[seed % 3])
        q = quadrature_for_matrix(hp, A, f, TOL)
        assert np.linalg.norm(g_matrix(f, q, A).value, 2) <= 1e-6


def test_g_matrix_diagonal_and_normal():
    lam = np.array([2.0, 1.5 + 1j, 3 - 2j])
    D = MatrixOperator(np.diag(lam))
    q = quadrature_for_matrix(H, D, RES, TOL)
    G = g_matrix(RES, q, D).value
    ref = [conj_cauchy_g(RES, q, z).value for z in lam]
    assert np.allclose(np.diag(G), ref, atol=1e-12)
    assert np.max(np.abs(G - np.diag(np.diag(G)))) < 1e-15
    A = random_matrix_in_domain(H, 5, 0.1, 4, "normal")
    from scipy.linalg import schur
    T, U = schur(A.entries, output="complex")
    q = quadrature_for_matrix(H, A, RES, TOL)
    G = g_matrix(RES, q, A).value
    gl = [conj_cauchy_g(RES, q, z).value for z in np.diag(T)]
    assert np.linalg.norm(G - (U * gl) @ U.conj().T, 2) < 1e-8


def test_g_matrix_consistency_bound(domain):
    bound = k_of_alpha(domain.alpha) * domain.expected_mass(True)
    r = np.random.default_rng(14)
    for seed in range(4):
        f = _normalized(random_rational(r), domain)
        A = random_matrix_in_domain(domain, 6, 0.1, seed)
        q = quadrature_for_matrix(domain, A, f, TOL)
        assert np.linalg.norm(g_matrix(f, q, A).value, 2) <= bound + 1e-6


# -- S ----------------------------------------------------------------------------------

def test_S_scalar_examples():
    q = build_quadrature(HalfPlane(), [1.0], TOL)
    assert abs(S_scalar(RES, q, 1.0).value - 0.5) < 1e-6
    assert S_scalar(RationalFunction(), q, 1.0).value == 0
    q = build_quadrature(H, [2.0], TOL, refine_near=[-1.0], density=RES)
    S = S_scalar(RES, q, 2.0).value
    g = conj_cauchy_g(RES, q, 2.0).value
    # scipy quad of the double-layer integral on |t| < 60
    assert S == pytest.approx(0.465585836837227, abs=1e-8)
    assert abs(S - RES.eval(2.0) - np.conj(g)) < 1e-6


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_scalar_identity(name):
    domain = FAMILIES[name]
    r = np.random.default_rng(15)
    worst = 0.0
    for _ in range(25):
        f = _normalized(random_rational(r), domain)
        z = interior_points(domain, r, 1, depth=(0.05, 3.0))[0]
        q = build_quadrature(domain, [z], TOL, refine_near=f.pole_locations(), density=f)
        S = S_scalar(f, q, z).value
        g = conj_cauchy_g(f, q, z).value
        worst = max(worst, abs(S - f.eval(z) - np.conj(g)))
    assert worst <= 10 * TOL


def test_S_matrix_examples():
    lam = np.array([2.0, 1.5 + 1j])
    D = MatrixOperator(np.diag(lam))
    q = quadrature_for_matrix(H, D, RES, TOL)
    S = S_matrix(RES, q, D).value
    assert np.allclose(np.diag(S), [S_scalar(RES, q, z).value for z in lam], atol=1e-13)
    assert np.max(np.abs(S - np.diag(np.diag(S)))) < 1e-15
    assert np.all(S_matrix(RationalFunction(), q, D).value == 0)


def test_S_matrix_lemma2_halfplane():
    hp = HalfPlane()
    r = np.random.default_rng(16)
    for seed in range(6):
        f = _normalized(random_rational(r), hp)
        A = random_matrix_in_domain(hp, 6, 0.1, seed, ("ginibre", "jordan", "normal")[seed % 3])
        q = quadrature_for_matrix(hp, A, f, TOL)
        assert np.linalg.norm(S_matrix(f, q, A).value, 2) <= 1 + 1e-6


def test_adjoint_identity(domain):
    r = np.random.default_rng(17)
    for seed in range(5):
        f = _normalized(random_rational(r), domain)
        A = random_matrix_in_domain(domain, 6, 0.1, seed, ("ginibre", "jordan", "normal")[seed % 3])
        q = quadrature_for_matrix(domain, A, f, TOL)
        S = S_matrix(f, q, A).value
        G = g_matrix(f, q, A).value
        F = eval_matrix_direct(f, A)
        assert np.linalg.norm(S.conj().T - F.conj().T - G, 2) <= 10 * TOL


def test_transforms_reproducible():
    A = random_matrix_in_domain(H, 6, 0.1, 1)
    q1 = quadrature_for_matrix(H, A, RES, TOL)
    q2 = quadrature_for_matrix(H, A, RES, TOL)
    assert q1.params.tobytes() == q2.params.tobytes()
    assert S_matrix(RES, q1, A).value.tobytes() == S_matrix(RES, q2, A).value.tobytes()


@settings(max_examples=40, deadline=None)
@given(name=st.sampled_from(sorted(FAMILIES)), t=st.floats(-5, 5), depth=st.floats(1e-3, 10.0))
def test_mass_identity_property(name, t, depth):
    domain = FAMILIES[name]
    bp = domain.boundary_point(t)
    z = bp.sigma + depth * 1j * bp.tangent
    if not domain.contains(z):
        return
    q = build_quadrature(domain, [z], TOL)
    assert abs(mass(q, z) - domain.expected_mass()) < 10 * TOL


def test_nearly_coincident_anchors():
    # a pole footprint one ulp from a boundary focus must not create a
    # zero-width panel with nodes on the focus
    H = Hyperbola(1.0, 1.0)
    t0 = 0.17432142505609538
    bp = H.boundary_point(t0)
    pole = H.boundary_point(np.nextafter(t0, 1.0)).sigma - 0.5 * 1j * bp.tangent
    q = build_quadrature(H, [bp.sigma], 1e-8, refine_near=[pole])
    assert np.all(np.diff(q.breaks) > 0)
    assert np.min(np.abs(q.sigma - bp.sigma)) > 0
    assert np.min(np.abs(q.companion.sigma - bp.sigma)) > 0
