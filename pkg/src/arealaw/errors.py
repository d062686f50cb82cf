"""Exception hierarchy shared by all arealaw modules."""


class ArealawError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(ArealawError):
    """Array dimensions are inconsistent with the requested operation."""


class ContractError(ArealawError):
    """A certified precondition or operator inequality failed.

    ``lambda_min`` carries the eigenvalue witness of the failed PSD check
    when one is available.
    """

    def __init__(self, message, lambda_min=None):
        super().__init__(message)
        self.lambda_min = lambda_min


class ResourceError(ArealawError):
    """A configured resource limit (ambient dimension, d_B, ...) was hit."""


class EigensolverError(ArealawError):
    """The dense eigensolver failed to converge."""


class SupportError(ArealawError):
    """supp(rho) is not contained in supp(sigma) within tolerance.

    ``leaked_mass`` is Tr((1 - Pi_sigma) rho), the mass outside the support.
    """

    def __init__(self, message, leaked_mass=None):
        super().__init__(message)
        self.leaked_mass = leaked_mass


class UnsupportedDimension(ArealawError):
    """Operation restricted to a fixed local dimension (oracle paths)."""


class GaplessError(ArealawError):
    """No spectral separation above the candidate ground band."""


class CeilingError(ArealawError):
    """The requested D^2*Delta ceiling is unreachable within the degree cap."""


class BudgetError(ArealawError):
    """A certified distance budget was exceeded; carries the audit chain."""

    def __init__(self, message, audit=None):
        super().__init__(message)
        self.audit = audit


class ConfigError(ArealawError):
    """Invalid CLI/config-file input."""
