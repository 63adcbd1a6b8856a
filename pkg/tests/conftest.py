import numpy as np
import pytest

from quadham.linalg3 import SymMat3
from quadham.poisson import SystemSpec

_LINES_KEY = pytest.StashKey[list]()


def random_orthogonal(rng):
    Q, R = np.linalg.qr(rng.normal(size=(3, 3)))
    return Q * np.sign(np.diag(R))


def random_spd(rng, lo=0.5, hi=3.0):
    Q = random_orthogonal(rng)
    return SymMat3.from_matrix(Q @ np.diag(rng.uniform(lo, hi, 3)) @ Q.T)


def random_sym(rng, bound=2.0):
    B = rng.uniform(-bound, bound, (3, 3))
    return SymMat3.from_matrix(np.triu(B) + np.triu(B, 1).T)


def random_pd_spec(rng):
    return SystemSpec(random_spd(rng), rng.uniform(-1, 1, 3), random_sym(rng), rng.uniform(-1, 1, 3))


def random_pencil_spec(rng, min_component=0.3):
    """K = (P - beta A) / alpha with P positive definite, so alpha K + beta A = P."""
    P = random_spd(rng)
    A = random_sym(rng)
    while True:
        theta = rng.uniform(0, 2 * np.pi)
        alpha, beta = np.cos(theta), np.sin(theta)
        if min(abs(alpha), abs(beta)) >= min_component:
            break
    K = (P - beta * A) / alpha
    return SystemSpec(K, rng.uniform(-1, 1, 3), A, rng.uniform(-1, 1, 3)), (alpha, beta)


def pencil_eigenvalues(A, K):
    """Roots of det(A - lam K) = 0, from the interpolated cubic and Newton polishing.

    Independent of Cholesky and Jacobi: only determinants and np.roots.
    """
    Af, Kf = np.asarray(A.full), np.asarray(K.full)

    def f(lam):
        return np.linalg.det(Af - lam * Kf)

    xs = np.array([-1.0, 0.0, 1.0, 2.0])
    coeffs = np.polyfit(xs, [f(x) for x in xs], 3)
    dcoeffs = np.polyder(coeffs)
    roots = np.sort(np.roots(coeffs).real)
    for _ in range(3):
        roots = roots - np.array([f(r) for r in roots]) / np.polyval(dcoeffs, roots)
    return np.sort(roots)


@pytest.fixture
def rng():
    return np.random.default_rng(20110222)


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(_LINES_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
