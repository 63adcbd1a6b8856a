"""Affine reduction of ``u' = (K u + k) x (A u + a)`` to the controlled Euler top.

The target system is ``v' = v x (D v + d)`` with ``D = diag(lambdas)``. Each
reduction is recorded as a chain of :class:`TransformStep` objects whose maps
compose (outermost first) into one :class:`AffineMap3` taking normal
coordinates ``v`` to original coordinates ``u = M v + c``.

Pipelines:

* :func:`normalize_homogeneous_pd` -- ``k = a = 0`` and ``K`` positive definite.
* :func:`normalize_homogeneous` -- ``k = a = 0``; if ``K`` is not definite a
  homothety ``u = beta p`` first swaps ``K`` for ``alpha A + beta K``.
* :func:`normalize_general` -- any system admitting a definite pencil
  ``alpha K + beta A``.
* :func:`try_homogenize` -- detects a shift ``u = beta p + gamma`` that kills
  both linear terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from quadham import linalg3
from quadham.errors import NoDefiniteCombination, Singular
from quadham.linalg3 import SymMat3, cholesky, cross, det, eig_sym, inverse, is_positive_definite
from quadham.poisson import SystemSpec, vector_field

GRID_POINTS = 720
REFINE_WIDTH = 1e-12
BETA_MIN = 1e-9
HOMOGENIZE_RTOL = 1e-10
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class StepKind(str, Enum):
    HOMOTHETY = "Homothety"
    CHOLESKY_LINEAR = "CholeskyLinear"
    ORTHOGONAL_DIAG = "OrthogonalDiag"
    GENERAL_AFFINE = "GeneralAffine"
    SL2_REWRITE = "SL2Rewrite"
    HOMOGENIZE = "Homogenize"


class Convention(str, Enum):
    A_FIRST = "A-first"  # alpha A + beta K
    K_FIRST = "K-first"  # alpha K + beta A


@dataclass(frozen=True, eq=False)
class AffineMap3:
    """``u = M v + c``."""

    M: np.ndarray
    c: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        M = np.array(self.M, dtype=float).reshape(3, 3)
        c = np.array(self.c, dtype=float).reshape(3)
        scale = float(np.linalg.norm(M))
        if scale == 0.0 or abs(det(M)) <= linalg3.SINGULAR_RTOL * scale**3:
            raise Singular("affine map has a singular linear part")
        M.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "c", c)

    @classmethod
    def identity(cls) -> "AffineMap3":
        return cls(np.eye(3))

    @classmethod
    def scaling(cls, s: float, shift=(0.0, 0.0, 0.0)) -> "AffineMap3":
        return cls(s * np.eye(3), shift)

    def __call__(self, v):
        return np.asarray(v, dtype=float) @ self.M.T + self.c

    def pull(self, u):
        """Apply the inverse map: ``v = M^{-1} (u - c)``."""
        return invert_map(self)(u)

    def push_field(self, dv):
        """Tangent vectors transform with the linear part only."""
        return np.asarray(dv, dtype=float) @ self.M.T


def compose_maps(outer: AffineMap3, inner: AffineMap3) -> AffineMap3:
    """``outer o inner``: ``(M1 M2, M1 c2 + c1)``."""
    return AffineMap3(outer.M @ inner.M, outer.M @ inner.c + outer.c)


def invert_map(m: AffineMap3) -> AffineMap3:
    Minv = inverse(m.M)
    return AffineMap3(Minv, -Minv @ m.c)


@dataclass(frozen=True, eq=False)
class TransformStep:
    kind: StepKind
    map: AffineMap3
    payload: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PencilCertificate:
    """Witness that ``alpha X + beta Y`` is positive definite.

    With ``Convention.A_FIRST`` the pair is ``(X, Y) = (A, K)``; with
    ``Convention.K_FIRST`` it is ``(K, A)``.
    """

    alpha: float
    beta: float
    min_eigenvalue: float
    convention: Convention

    def combine(self, X: SymMat3, Y: SymMat3) -> SymMat3:
        return self.alpha * X + self.beta * Y


@dataclass(frozen=True, eq=False)
class NormalForm:
    lambdas: np.ndarray
    d: np.ndarray
    map: AffineMap3
    steps: tuple
    certificate: Optional[PencilCertificate] = None

    def as_spec(self) -> SystemSpec:
        return SystemSpec.euler_top(self.lambdas, self.d)

    def field(self, v):
        v = np.asarray(v, dtype=float)
        return cross(v, v * self.lambdas + self.d)

    def with_map(self, new_map: AffineMap3) -> "NormalForm":
        return NormalForm(self.lambdas, self.d, new_map, self.steps, self.certificate)


def chain(steps) -> AffineMap3:
    out = AffineMap3.identity()
    for step in steps:
        out = compose_maps(out, step.map)
    return out


def intertwining_residual(spec: SystemSpec, nf: NormalForm, v) -> np.ndarray:
    """``M (v x (D v + d)) - F(M v + c)``; zero when the two fields are conjugate."""
    return nf.map.push_field(nf.field(v)) - vector_field(spec, nf.map(v))


# ---------------------------------------------------------------------------
# definite pencils


def _lambda_min(X: np.ndarray, Y: np.ndarray, theta) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    stack = np.cos(theta)[:, None, None] * X + np.sin(theta)[:, None, None] * Y
    return np.linalg.eigvalsh(stack)[:, 0]


def _margin(X: np.ndarray, Y: np.ndarray, theta: float) -> float:
    """Smallest eigenvalue minus the definiteness threshold at angle theta."""
    P = math.cos(theta) * X + math.sin(theta) * Y
    return float(np.linalg.eigvalsh(P)[0]) - linalg3.pd_threshold(P)


def _golden_max(fn, lo: float, hi: float, width: float) -> float:
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = fn(x1), fn(x2)
    while hi - lo > width:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = fn(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = fn(x1)
    return 0.5 * (lo + hi)


def _arc_edge(X, Y, theta: float, direction: float) -> float:
    """Distance from a feasible angle to the edge of its feasible arc."""
    step = 2.0 * math.pi / GRID_POINTS
    inside, dist = 0.0, step
    while dist < math.pi and _margin(X, Y, theta + direction * dist) > 0:
        inside, dist = dist, dist + step
    outside = min(dist, math.pi)
    while outside - inside > REFINE_WIDTH:
        mid = 0.5 * (inside + outside)
        if _margin(X, Y, theta + direction * mid) > 0:
            inside = mid
        else:
            outside = mid
    return inside


def find_definite_pencil(
    X: SymMat3,
    Y: SymMat3,
    convention: Convention | str = Convention.A_FIRST,
    require_beta_nonzero: bool = False,
) -> PencilCertificate:
    """Maximise ``lambda_min(cos t X + sin t Y)`` over the unit circle.

    A 720-point grid locates the best angle, which golden-section search then
    refines. Feasible arcs narrower than one grid cell (0.5 degrees) can be
    missed.
    """
    convention = Convention(convention)
    Xf, Yf = X.full, Y.full
    grid = np.linspace(0.0, 2.0 * math.pi, GRID_POINTS, endpoint=False)
    i = int(np.argmax(_lambda_min(Xf, Yf, grid)))
    h = grid[1] - grid[0]
    theta = _golden_max(
        lambda t: float(_lambda_min(Xf, Yf, t)[0]), grid[i] - h, grid[i] + h, REFINE_WIDTH
    )
    if _margin(Xf, Yf, theta) <= 0:
        raise NoDefiniteCombination(
            "no definite pencil: best combination has min eigenvalue "
            f"{float(_lambda_min(Xf, Yf, theta)[0]):.3e} "
            f"(feasible arcs narrower than {360 / GRID_POINTS} degrees are not detected)"
        )
    if require_beta_nonzero and abs(math.sin(theta)) < BETA_MIN:
        # slide towards the centre of the longer half of the feasible arc
        left = _arc_edge(Xf, Yf, theta, -1.0)
        right = _arc_edge(Xf, Yf, theta, +1.0)
        theta = theta + 0.5 * right if right >= left else theta - 0.5 * left
        if abs(math.sin(theta)) < BETA_MIN or _margin(Xf, Yf, theta) <= 0:
            raise NoDefiniteCombination("no definite pencil with nonzero beta")
    alpha, beta = math.cos(theta), math.sin(theta)
    lam = float(linalg3.eigvals_sym(alpha * X + beta * Y)[0])
    return PencilCertificate(alpha, beta, lam, convention)


# ---------------------------------------------------------------------------
# single reduction steps


def _cholesky_step(K: SymMat3, A: SymMat3, k=None, a=None, kind=StepKind.CHOLESKY_LINEAR):
    """``u = det(L^-1) L^-T w - K^-1 k`` with ``K = L L^T``.

    Returns ``(A_hat, a_hat, step)`` where ``w' = w x (A_hat w + a_hat)``.
    """
    L = cholesky(K)
    Linv = inverse(L)
    detL = det(L)
    A_hat = SymMat3.from_matrix(Linv @ A.full @ Linv.T)
    if k is None:
        shift = np.zeros(3)
        a_hat = np.zeros(3) if a is None else detL * (Linv @ a)
    else:
        Kinv_k = inverse(K) @ k
        shift = -Kinv_k
        a_hat = detL * (Linv @ (a - A.full @ Kinv_k))
    step = TransformStep(kind, AffineMap3(Linv.T / detL, shift), {"L": L})
    return A_hat, a_hat, step


def _orthogonal_step(A_hat: SymMat3, a_hat):
    """``w = det(R) R v`` with ``R^T A_hat R = D``; returns ``(lambdas, d, step)``."""
    R, D = eig_sym(A_hat)
    detR = det(R)
    d = detR * (R.T @ a_hat)
    step = TransformStep(StepKind.ORTHOGONAL_DIAG, AffineMap3(detR * R), {"R": R})
    return D.diagonal(), d, step


def homothety_reduce(K: SymMat3, A: SymMat3, cert: PencilCertificate):
    """Replace ``K`` by ``alpha A + beta K`` via ``u = beta p``.

    Returns ``(K_new, A, step)``.
    """
    if cert.convention is not Convention.A_FIRST:
        raise ValueError("homothety_reduce needs an A-first certificate (alpha A + beta K)")
    if cert.beta == 0.0:
        raise ValueError("homothety needs beta != 0")
    K_new = cert.combine(A, K)
    step = TransformStep(
        StepKind.HOMOTHETY,
        AffineMap3.scaling(cert.beta),
        {"alpha": cert.alpha, "beta": cert.beta},
    )
    return K_new, A, step


def sl2_completion(alpha: float, beta: float) -> tuple[float, float]:
    """``(gamma, delta)`` with ``alpha delta - beta gamma = 1``, of minimal norm."""
    r2 = alpha * alpha + beta * beta
    return -beta / r2, alpha / r2


# ---------------------------------------------------------------------------
# pipelines


def _finish(A_hat, a_hat, steps, cert=None) -> NormalForm:
    lambdas, d, orth = _orthogonal_step(A_hat, a_hat)
    steps = tuple(steps) + (orth,)
    return NormalForm(lambdas, d, chain(steps), steps, cert)


def normalize_homogeneous_pd(K: SymMat3, A: SymMat3) -> NormalForm:
    """Normal form of ``u' = (K u) x (A u)`` for positive definite ``K``."""
    A_hat, a_hat, step = _cholesky_step(K, A)
    return _finish(A_hat, a_hat, [step])


def normalize_homogeneous(K: SymMat3, A: SymMat3) -> NormalForm:
    """Normal form of ``u' = (K u) x (A u)``, via a homothety when ``K`` is not definite."""
    if is_positive_definite(K):
        return normalize_homogeneous_pd(K, A)
    cert = find_definite_pencil(A, K, Convention.A_FIRST, require_beta_nonzero=True)
    K_new, _, homothety = homothety_reduce(K, A, cert)
    A_hat, a_hat, step = _cholesky_step(K_new, A)
    return _finish(A_hat, a_hat, [homothety, step], cert)


def normalize_general(spec: SystemSpec) -> NormalForm:
    """Normal form of ``u' = (K u + k) x (A u + a)``.

    If ``K`` is not positive definite the system is first rewritten with a
    definite Casimir ``alpha K + beta A`` and the SL(2,R) partner
    ``gamma K + delta A``; this leaves the field, and so the map, unchanged.
    """
    K, k, A, a = spec.K, spec.k, spec.A, spec.a
    steps = []
    cert = None
    if not is_positive_definite(K):
        cert = find_definite_pencil(K, A, Convention.K_FIRST)
        alpha, beta = cert.alpha, cert.beta
        gamma, delta = sl2_completion(alpha, beta)
        K, k, A, a = (
            alpha * spec.K + beta * spec.A,
            alpha * spec.k + beta * spec.a,
            gamma * spec.K + delta * spec.A,
            gamma * spec.k + delta * spec.a,
        )
        steps.append(
            TransformStep(
                StepKind.SL2_REWRITE,
                AffineMap3.identity(),
                {"alpha": alpha, "beta": beta, "gamma": gamma, "delta": delta},
            )
        )
    A_hat, a_hat, step = _cholesky_step(K, A, k, a, kind=StepKind.GENERAL_AFFINE)
    steps.append(step)
    return _finish(A_hat, a_hat, steps, cert)


@dataclass(frozen=True, eq=False)
class Homogenization:
    """Result of :func:`try_homogenize`: ``u = beta p + gamma_vec`` with ``p' = (K_hom p) x (A p)``."""

    gamma_vec: np.ndarray
    K_hom: SymMat3
    A: SymMat3
    beta: float
    step: TransformStep
    certificate: PencilCertificate

    @property
    def reduced_spec(self) -> SystemSpec:
        return SystemSpec.homogeneous(self.K_hom, self.A)


def try_homogenize(spec: SystemSpec) -> Optional[Homogenization]:
    """Look for ``gamma`` with ``A gamma + a = 0`` and ``K gamma + k = 0``.

    Returns ``None`` when no such shift exists or when no definite pencil
    ``alpha A + beta K`` with ``beta != 0`` is found.
    """
    lhs = np.vstack([spec.A.full, spec.K.full])
    rhs = -np.concatenate([spec.a, spec.k])
    gamma_vec = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    residual = float(np.linalg.norm(lhs @ gamma_vec - rhs))
    tol = HOMOGENIZE_RTOL * (1.0 + np.linalg.norm(spec.a) + np.linalg.norm(spec.k))
    if residual > tol:
        return None
    try:
        cert = find_definite_pencil(spec.A, spec.K, Convention.A_FIRST, require_beta_nonzero=True)
    except NoDefiniteCombination:
        return None
    K_hom, A, _ = homothety_reduce(spec.K, spec.A, cert)
    step = TransformStep(
        StepKind.HOMOGENIZE,
        AffineMap3.scaling(cert.beta, gamma_vec),
        {"alpha": cert.alpha, "beta": cert.beta, "gamma_vec": gamma_vec},
    )
    return Homogenization(gamma_vec, K_hom, A, cert.beta, step, cert)
