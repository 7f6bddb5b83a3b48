"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: usage problems exit 2,
infeasible models exit 3, numerical failures exit 4.
"""


class FchError(Exception):
    """Base class for package errors."""


class InfeasibleModelError(FchError):
    """The requested model has no solution (bad well, placement, geometry)."""


class InfeasibleWellError(InfeasibleModelError):
    """The double well admits no compacton profile for these parameters."""


class PlacementError(InfeasibleModelError):
    """Micelle centers cannot be placed at the requested density."""


class NumericsError(FchError):
    """A quadrature, root find, or ODE integration failed to converge."""
