import numpy as np
import pytest

from spectral_lab import HalfPlane, Hyperbola, Parabola, RationalFunction, sector_approx

DOMAINS = {
    "halfplane": HalfPlane(),
    "hyperbola": Hyperbola(1.0, 1.0),
    "parabola": Parabola(1.0),
}

ACCEPTANCE_LINES = []


def random_rational(rng, n_poles=None, max_order=2, inf=0.0):
    """Partial fractions with poles strictly in the left half-plane."""
    k = n_poles or int(rng.integers(1, 4))
    poles, terms = [], []
    for _ in range(k):
        p = complex(-(0.2 + rng.exponential(1.0)), 2.0 * rng.standard_normal())
        order = int(rng.integers(1, max_order + 1))
        poles.append((p, order))
        terms.append([complex(rng.standard_normal(), rng.standard_normal()) for _ in range(order)])
    return RationalFunction(poles, terms, inf)


def interior_points(domain, rng, count, depth=(0.05, 3.0), span=3.0):
    """Points at random depth along the inward normal of random boundary points."""
    out = []
    for t in rng.uniform(-span, span, count):
        bp = domain.boundary_point(t)
        out.append(bp.sigma + rng.uniform(*depth) * 1j * bp.tangent)
    return np.array(out)


@pytest.fixture(params=list(DOMAINS), ids=list(DOMAINS))
def domain(request):
    return DOMAINS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


__all__ = ["DOMAINS", "ACCEPTANCE_LINES", "random_rational", "interior_points", "sector_approx"]
