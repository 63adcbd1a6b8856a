"""Fixed-size 3x3 linear algebra.

Vectors and general matrices are plain ``numpy`` arrays of shape ``(3,)`` and
``(3, 3)``. Symmetric matrices get their own type, :class:`SymMat3`, which
stores only the upper triangle so an asymmetric value cannot be built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from quadham.errors import NotPositiveDefinite, Singular

#: Relative margin used by every "is positive definite" decision.
PD_RTOL = 1e-10
#: Relative determinant margin below which a matrix is treated as singular.
SINGULAR_RTOL = 1e-12
#: Jacobi sweeps stop once the off-diagonal norm drops below this fraction of ||M||_F.
JACOBI_RTOL = 1e-14
JACOBI_MAX_SWEEPS = 50

# (row, col) of the six stored entries, in storage order
_UPPER = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


@dataclass(frozen=True)
class SymMat3:
    """Symmetric 3x3 matrix stored as ``(m11, m12, m13, m22, m23, m33)``."""

    entries: tuple

    def __post_init__(self):
        vals = tuple(float(x) for x in self.entries)
        if len(vals) != 6:
            raise ValueError(f"SymMat3 needs 6 entries, got {len(vals)}")
        if not all(math.isfinite(x) for x in vals):
            raise ValueError(f"SymMat3 entries must be finite: {vals}")
        object.__setattr__(self, "entries", vals)

    @classmethod
    def from_matrix(cls, M) -> "SymMat3":
        """Build from a full 3x3 array, averaging off-diagonal pairs."""
        M = np.asarray(M, dtype=float)
        if M.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {M.shape}")
        S = 0.5 * (M + M.T)
        return cls(tuple(S[i, j] for i, j in _UPPER))

    @classmethod
    def diag(cls, values: Sequence[float]) -> "SymMat3":
        d1, d2, d3 = values
        return cls((d1, 0.0, 0.0, d2, 0.0, d3))

    @classmethod
    def identity(cls) -> "SymMat3":
        return cls.diag((1.0, 1.0, 1.0))

    @classmethod
    def zeros(cls) -> "SymMat3":
        return cls((0.0,) * 6)

    @property
    def full(self) -> np.ndarray:
        m11, m12, m13, m22, m23, m33 = self.entries
        return np.array([[m11, m12, m13], [m12, m22, m23], [m13, m23, m33]])

    def diagonal(self) -> np.ndarray:
        return np.array([self.entries[0], self.entries[3], self.entries[5]])

    def norm(self) -> float:
        """Frobenius norm."""
        m11, m12, m13, m22, m23, m33 = self.entries
        return math.sqrt(m11**2 + m22**2 + m33**2 + 2.0 * (m12**2 + m13**2 + m23**2))

    def __matmul__(self, other):
        return self.full @ np.asarray(other, dtype=float)

    def __add__(self, other: "SymMat3") -> "SymMat3":
        return SymMat3(tuple(x + y for x, y in zip(self.entries, other.entries)))

    def __sub__(self, other: "SymMat3") -> "SymMat3":
        return SymMat3(tuple(x - y for x, y in zip(self.entries, other.entries)))

    def __mul__(self, s: float) -> "SymMat3":
        return SymMat3(tuple(s * x for x in self.entries))

    __rmul__ = __mul__

    def __truediv__(self, s: float) -> "SymMat3":
        return SymMat3(tuple(x / s for x in self.entries))

    def __neg__(self) -> "SymMat3":
        return SymMat3(tuple(-x for x in self.entries))


SymLike = Union[SymMat3, np.ndarray, Iterable]


def as_full(M: SymLike) -> np.ndarray:
    if isinstance(M, SymMat3):
        return M.full
    return np.asarray(M, dtype=float)


def vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(3)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"vector components must be finite: {v}")
    return v


def cross(u, v) -> np.ndarray:
    """Right-handed cross product; broadcasts over leading axes."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.stack(
        [
            u[..., 1] * v[..., 2] - u[..., 2] * v[..., 1],
            u[..., 2] * v[..., 0] - u[..., 0] * v[..., 2],
            u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0],
        ],
        axis=-1,
    )


def cross_K(K: SymLike, u, v) -> np.ndarray:
    """The bracket of the Lie algebra o(K) transported to R^3: K (u x v)."""
    return as_full(K) @ cross(u, v)


def skew(s) -> np.ndarray:
    """Matrix of ``x -> s x x``."""
    s1, s2, s3 = np.asarray(s, dtype=float)
    return np.array([[0.0, -s3, s2], [s3, 0.0, -s1], [-s2, s1, 0.0]])


def hat_K(K: SymLike, s) -> np.ndarray:
    """K-skew matrix S with ``S u = s x (K u)``, i.e. ``skew(s) K``.

    Defined for every symmetric K. For singular K the map is no longer
    injective, but ``S^T K + K S = 0`` and the commutator identity still hold.
    """
    return skew(s) @ as_full(K)


def det(M) -> float:
    M = np.asarray(M, dtype=float)
    return float(
        M[0, 0] * (M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
        - M[0, 1] * (M[1, 0] * M[2, 2] - M[1, 2] * M[2, 0])
        + M[0, 2] * (M[1, 0] * M[2, 1] - M[1, 1] * M[2, 0])
    )


def inverse(M) -> np.ndarray:
    """Cofactor inverse of a 3x3 matrix."""
    M = as_full(M)
    d = det(M)
    scale = float(np.linalg.norm(M))
    if scale == 0.0 or abs(d) <= SINGULAR_RTOL * scale**3:
        raise Singular(f"matrix is numerically singular (det={d:.3e}, |M|_F={scale:.3e})")
    adj = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            r = [x for x in range(3) if x != j]
            c = [x for x in range(3) if x != i]
            minor = M[r[0], c[0]] * M[r[1], c[1]] - M[r[0], c[1]] * M[r[1], c[0]]
            adj[i, j] = (-1) ** (i + j) * minor
    return adj / d


def pd_threshold(M: SymLike) -> float:
    return PD_RTOL * max(1.0, float(np.linalg.norm(as_full(M))))


def _jacobi(S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi rotations; returns (eigenvalues, eigenvector columns), unsorted."""
    S = S.copy()
    V = np.eye(3)
    target = JACOBI_RTOL * float(np.linalg.norm(S))
    for _ in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(2.0 * (S[0, 1] ** 2 + S[0, 2] ** 2 + S[1, 2] ** 2))
        if off <= target:
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = S[p, q]
            if apq == 0.0:
                continue
            tau = (S[q, q] - S[p, p]) / (2.0 * apq)
            t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
            c = 1.0 / math.sqrt(1.0 + t * t)
            s = t * c
            J = np.eye(3)
            J[p, p] = J[q, q] = c
            J[p, q] = s
            J[q, p] = -s
            S = J.T @ S @ J
            S = 0.5 * (S + S.T)
            S[p, q] = S[q, p] = 0.0
            V = V @ J
    return np.diag(S).copy(), V


def eig_sym(M: SymLike) -> tuple[np.ndarray, SymMat3]:
    """Symmetric eigendecomposition ``R^T M R = D``.

    Eigenvalues ascend along the diagonal of ``D``. Each column of ``R`` has
    its largest-magnitude component positive, after which the third column is
    negated if needed so that ``det(R) = +1``.
    """
    S = as_full(M)
    lam, V = _jacobi(S)
    order = np.argsort(lam, kind="stable")
    lam = lam[order]
    R = V[:, order]
    for j in range(3):
        if R[np.argmax(np.abs(R[:, j])), j] < 0:
            R[:, j] = -R[:, j]
    if det(R) < 0:
        R[:, 2] = -R[:, 2]
    return R, SymMat3.diag(lam)


def eigvals_sym(M: SymLike) -> np.ndarray:
    return eig_sym(M)[1].diagonal()


def is_positive_definite(M: SymLike) -> bool:
    return bool(eigvals_sym(M)[0] > pd_threshold(M))


def cholesky(M: SymLike) -> np.ndarray:
    """Lower-triangular ``L`` with positive diagonal and ``L L^T = M``."""
    S = as_full(M)
    thr = pd_threshold(S)
    lam_min = eigvals_sym(S)[0]
    if lam_min <= thr:
        raise NotPositiveDefinite(
            f"matrix is not positive definite (min eigenvalue {lam_min:.3e} <= {thr:.3e})"
        )
    L = np.zeros((3, 3))
    for j in range(3):
        pivot = S[j, j] - L[j, :j] @ L[j, :j]
        if pivot <= thr:
            raise NotPositiveDefinite(f"Cholesky pivot {j} is {pivot:.3e}")
        L[j, j] = math.sqrt(pivot)
        for i in range(j + 1, 3):
            L[i, j] = (S[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    return L
