"""Exception types shared across the package."""


class ApmiError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(ApmiError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateNoiseError(ApmiError, ValueError):
    """Total noise power W + rho*J is zero; infinite SNR is rejected."""


class FlatnessCheckError(ApmiError, RuntimeError):
    """A generated sequence failed its spectral self-check.

    This signals an internal defect (e.g. a bad polynomial table entry),
    not a user error.
    """


class NumericalError(ApmiError, RuntimeError):
    """A numerical routine failed to reach its documented tolerance."""
