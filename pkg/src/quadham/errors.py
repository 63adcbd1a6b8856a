"""Exception hierarchy shared by every quadham module."""


class QuadhamError(Exception):
    """Base class for all library errors."""


class NotPositiveDefinite(QuadhamError):
    pass


class Singular(QuadhamError):
    pass


class NotUnimodular(QuadhamError):
    pass


class NoDefiniteCombination(QuadhamError):
    """No real combination of the two symmetric matrices is positive definite."""


class NonFinite(QuadhamError):
    """An integrated state left the finite floating-point range."""


class StepSizeError(QuadhamError):
    """The implicit solver failed to converge within its iteration budget."""
