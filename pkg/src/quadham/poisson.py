"""Casimirs, Hamiltonians, the Lie-Poisson bracket and its SL(2,R) realizations.

A system is the quadruple ``(K, k, A, a)``. Its bracket is
``{f, g}(u) = -grad C(u) . (grad f(u) x grad g(u))`` with Casimir
``C(u) = u^T K u / 2 + u^T k``, and the Hamiltonian ``H(u) = u^T A u / 2 + u^T a``
generates ``u' = (K u + k) x (A u + a)``. The homogeneous case is ``k = a = 0``.

All point-wise functions broadcast over leading axes of ``u``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from quadham.errors import NotUnimodular
from quadham.linalg3 import SymMat3, cross, vec3

UNIMODULAR_ATOL = 1e-12


def _frozen_vec(x) -> np.ndarray:
    v = vec3(x).copy()
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class QuadraticFn:
    """``f(u) = u^T Q u / 2 + u^T q``."""

    Q: SymMat3
    q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", _frozen_vec(self.q))

    def value(self, u):
        u = np.asarray(u, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", u, self.Q.full, u) + u @ self.q

    def grad(self, u):
        u = np.asarray(u, dtype=float)
        return u @ self.Q.full + self.q


@dataclass(frozen=True, eq=False)
class ProductFn:
    """Pointwise product of two functions that expose ``value`` and ``grad``."""

    left: object
    right: object

    def value(self, u):
        return self.left.value(u) * self.right.value(u)

    def grad(self, u):
        lv = np.asarray(self.left.value(u))[..., None]
        rv = np.asarray(self.right.value(u))[..., None]
        return lv * self.right.grad(u) + rv * self.left.grad(u)


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """The quadruple (K, k, A, a) of one quadratic Hamiltonian system."""

    K: SymMat3
    k: np.ndarray
    A: SymMat3
    a: np.ndarray
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "k", _frozen_vec(self.k))
        object.__setattr__(self, "a", _frozen_vec(self.a))

    @classmethod
    def homogeneous(cls, K: SymMat3, A: SymMat3, name: str = "") -> "SystemSpec":
        return cls(K, np.zeros(3), A, np.zeros(3), name)

    @classmethod
    def euler_top(cls, lambdas, d=(0.0, 0.0, 0.0), name: str = "") -> "SystemSpec":
        """``v' = v x (diag(lambdas) v + d)``: the (controlled) relaxed free rigid body."""
        return cls(SymMat3.identity(), np.zeros(3), SymMat3.diag(lambdas), d, name)

    @property
    def casimir(self) -> QuadraticFn:
        return QuadraticFn(self.K, self.k)

    @property
    def hamiltonian(self) -> QuadraticFn:
        return QuadraticFn(self.A, self.a)

    def is_homogeneous(self) -> bool:
        return not (np.any(self.k) or np.any(self.a))

    def same_as(self, other: "SystemSpec") -> bool:
        return (
            self.K == other.K
            and self.A == other.A
            and np.array_equal(self.k, other.k)
            and np.array_equal(self.a, other.a)
        )


def casimir_value(spec: SystemSpec, u):
    return spec.casimir.value(u)


def hamiltonian_value(spec: SystemSpec, u):
    return spec.hamiltonian.value(u)


def vector_field(spec: SystemSpec, u):
    """``(K u + k) x (A u + a)``."""
    u = np.asarray(u, dtype=float)
    return cross(u @ spec.K.full + spec.k, u @ spec.A.full + spec.a)


def bracket_from_gradients(spec: SystemSpec, grad_f, grad_g, u):
    grad_c = spec.casimir.grad(u)
    return -np.sum(grad_c * cross(grad_f, grad_g), axis=-1)


def bracket(spec: SystemSpec, f, g, u):
    """``{f, g}(u)`` for any ``f``, ``g`` exposing a closed-form ``grad``."""
    return bracket_from_gradients(spec, f.grad(u), g.grad(u), u)


def fd_gradient(fn, u, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function; for cross-checks only."""
    u = vec3(u)
    out = np.empty(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        out[i] = (fn(u + e) - fn(u - e)) / (2.0 * h)
    return out


@dataclass(frozen=True, eq=False)
class Realization:
    """One member ``(C^{alpha,beta}, H^{gamma,delta})`` of the SL(2,R) family."""

    alpha: float
    beta: float
    gamma: float
    delta: float
    casimir: QuadraticFn
    hamiltonian: QuadraticFn

    @property
    def determinant(self) -> float:
        return self.alpha * self.delta - self.beta * self.gamma

    def field(self, u):
        return cross(self.casimir.grad(u), self.hamiltonian.grad(u))

    def as_spec(self, name: str = "") -> SystemSpec:
        return SystemSpec(self.casimir.Q, self.casimir.q, self.hamiltonian.Q, self.hamiltonian.q, name)


def mix(spec: SystemSpec, m) -> Realization:
    """Mix (K, k) and (A, a) by the rows of a 2x2 matrix, whatever its determinant.

    The induced field is ``det(m)`` times the original one.
    """
    (alpha, beta), (gamma, delta) = np.asarray(m, dtype=float).reshape(2, 2)
    casimir = QuadraticFn(alpha * spec.K + beta * spec.A, alpha * spec.k + beta * spec.a)
    hamiltonian = QuadraticFn(gamma * spec.K + delta * spec.A, gamma * spec.k + delta * spec.a)
    return Realization(float(alpha), float(beta), float(gamma), float(delta), casimir, hamiltonian)


def realization(spec: SystemSpec, m) -> Realization:
    """Hamilton-Poisson realization of the same field for ``m`` in SL(2,R)."""
    r = mix(spec, m)
    if abs(r.determinant - 1.0) > UNIMODULAR_ATOL:
        raise NotUnimodular(f"det(m) = {r.determinant!r}, expected 1")
    return r


def _field_scale(X: SymMat3, x, Y: SymMat3, y, u):
    r = np.linalg.norm(u, axis=-1)
    return (X.norm() * r + np.linalg.norm(x)) * (Y.norm() * r + np.linalg.norm(y))


def realization_deviation(spec: SystemSpec, r: Realization, u, factor: float = 1.0):
    """Scale-relative gap ``|grad C x grad H - factor * F(u)|`` between the two fields.

    The scale is the size of the products entering either cross product, so
    the result is a roundoff-level quantity when the fields agree.
    """
    u = np.asarray(u, dtype=float)
    gap = np.linalg.norm(r.field(u) - factor * vector_field(spec, u), axis=-1)
    scale = np.maximum(
        _field_scale(spec.K, spec.k, spec.A, spec.a, u),
        _field_scale(r.casimir.Q, r.casimir.q, r.hamiltonian.Q, r.hamiltonian.q, u),
    )
    return gap / np.maximum(1.0, scale)
