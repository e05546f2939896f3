"""Exception types shared across the package."""


class ChiralabError(Exception):
    """Base class for all package-specific errors."""


class ZeroVectorError(ChiralabError):
    """A vector that must be normalized has (near-)zero length."""


class DegenerateProjectionError(ChiralabError):
    """Projection onto a circle is ill-posed (input parallel to the axis)."""


class EmptyFamilyError(ChiralabError):
    """A circle family needs at least one axis."""


class InvalidDeltaError(ChiralabError):
    """delta outside the admissible range for the requested construction."""


class ChainTooShortError(ChiralabError):
    """Operation needs more lattice sites than the chain provides."""


class GridTooSmallError(ChiralabError):
    """Operation needs a larger spin grid."""


class FamilyMismatchError(ChiralabError):
    """Assignment/field refers to circles that do not exist in the family."""


class ValidationError(ChiralabError):
    """A container invariant (unit norms, shapes, parameter ranges) is broken."""


class OutOfDomainError(ChiralabError):
    """Evaluation point lies outside the domain of the interpolant."""


class EmptySliceError(ChiralabError):
    """A line slice meets the domain in fewer than two lattice points."""


class NotOnLevelSetError(ChiralabError):
    """Density endpoint is not on the unit level set of the anisotropy norm."""


class BadJumpSetError(ChiralabError):
    """A jump-set simplex leaves the closed domain and cannot be recovered."""


class DivergedError(ChiralabError):
    """An iterative solver produced a non-finite energy."""


class RegimeViolationError(ChiralabError):
    """Experiment parameters leave the asymptotic regime they are meant to probe."""


class ConfigError(ChiralabError):
    """Malformed experiment configuration or command-line usage."""
