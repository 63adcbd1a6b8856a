"""Normal forms of quadratic Hamiltonian systems ``u' = (K u + k) x (A u + a)`` on R^3."""

from quadham.errors import (
    NoDefiniteCombination,
    NonFinite,
    NotPositiveDefinite,
    NotUnimodular,
    QuadhamError,
    Singular,
    StepSizeError,
)
from quadham.linalg3 import SymMat3
from quadham.normal_form import (
    AffineMap3,
    NormalForm,
    PencilCertificate,
    find_definite_pencil,
    normalize_general,
    normalize_homogeneous,
    normalize_homogeneous_pd,
    try_homogenize,
)
from quadham.poisson import QuadraticFn, Realization, SystemSpec, realization, vector_field
from quadham.dynamics import IntegratorConfig, integrate, verify_equivalence

__version__ = "0.1.0"
