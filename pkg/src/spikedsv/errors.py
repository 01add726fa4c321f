"""Exception types shared across the package."""


class SpikedSVError(Exception):
    """Base class for all package errors."""


class DomainError(SpikedSVError):
    """An evaluation point lies outside a function's valid domain."""


class NonConvergence(SpikedSVError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class OutOfRange(SpikedSVError):
    """A functional inverse was requested outside its range.

    In particular: a spike strength at or below the phase-transition
    threshold, where no detached extreme singular value exists.  Callers
    that want the subcritical branch must catch this and use the bulk edge.
    """


class InvalidSpec(SpikedSVError):
    """A spike specification violates a structural requirement."""


class NegativeVariance(SpikedSVError):
    """The orthonormalized-model variance formula produced s^2 < 0."""


class DimensionError(SpikedSVError):
    """Matrix dimensions incompatible with the requested model."""


class RankDeficient(SpikedSVError):
    """Orthonormalization hit a numerically singular column block."""


class NearSingularShift(SpikedSVError):
    """A shifted solve was requested too close to a singular value."""


class UnknownTheta(SpikedSVError):
    """A projection was requested for a theta absent from the perturbation."""


class ConvergenceFailure(SpikedSVError):
    """Dense SVD did not converge."""


class InvariantViolation(SpikedSVError):
    """A hard structural invariant (e.g. Weyl interlacing) failed."""


class SchemaError(SpikedSVError):
    """A config document or CLI argument set does not match the schema."""
