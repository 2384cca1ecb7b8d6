"""Exception hierarchy.

Every error raised by the package derives from :class:`GalerkinError`, so a
caller can catch the whole family at once. The CLI maps the subclasses onto
its exit codes.
"""


class GalerkinError(Exception):
    """Base class for all package errors."""


class InvalidRangeError(GalerkinError, ValueError):
    """Interval with ``lower >= upper``."""


class InvalidCountError(GalerkinError, ValueError):
    """A count argument outside its admissible range."""


class GridMismatchError(GalerkinError, ValueError):
    """Grid functions (or functionals) defined on different grids."""


class LengthMismatchError(GalerkinError, ValueError):
    """Coefficient vector and basis have different lengths."""


class DomainMismatchError(GalerkinError, ValueError):
    """Basis, operator or grid live on different intervals."""


class IndependenceLossError(GalerkinError):
    """Sampled functions are numerically dependent on the given grid."""

    def __init__(self, message, score=None):
        super().__init__(message)
        self.score = score


class ImagesDependentError(IndependenceLossError):
    """Operator images ``L psi_k`` fail the independence threshold."""


class CannotExtendError(IndependenceLossError):
    """The trial system cannot be extended to the requested size."""

    def __init__(self, message, achieved_rank, requested):
        super().__init__(message)
        self.achieved_rank = achieved_rank
        self.requested = requested


class SingularGramError(GalerkinError):
    """A Gram matrix that must be inverted is singular."""


class IncompatibleSpacesError(GalerkinError):
    """Operation requires ``X = Y`` but the operator maps between intervals."""


class SizeMismatchError(GalerkinError, ValueError):
    """System size larger than the available images or functionals."""


class SingularSystemError(GalerkinError):
    """The Galerkin matrix fails the correctness (nonsingularity) test."""


class SizeLimitError(GalerkinError, ValueError):
    """Cramer's rule requested for a system larger than the cap."""


class NoWitnessError(GalerkinError):
    """The joint kernel of the constraint functionals is trivial."""


class NoFeasibleDirectionError(NoWitnessError):
    """No direction satisfies the worst-case constraints."""


class ConfigError(GalerkinError, ValueError):
    """Malformed scenario configuration or unresolvable catalog name."""


_CODES = (
    (CannotExtendError, "cannot-extend"),
    (ImagesDependentError, "images-dependent"),
    (IndependenceLossError, "independence-loss"),
    (NoFeasibleDirectionError, "no-feasible-direction"),
    (NoWitnessError, "no-witness"),
    (SingularSystemError, "singular-system"),
    (SingularGramError, "singular-gram"),
    (SizeLimitError, "size-limit"),
    (SizeMismatchError, "size-mismatch"),
    (GridMismatchError, "grid-mismatch"),
    (LengthMismatchError, "length-mismatch"),
    (DomainMismatchError, "domain-mismatch"),
    (IncompatibleSpacesError, "incompatible-spaces"),
    (ConfigError, "config-parse"),
    (InvalidRangeError, "invalid-range"),
    (InvalidCountError, "invalid-count"),
)


def error_code(exc: BaseException) -> str:
    """Short kebab-case code used in reports and sweep tables."""
    for cls, code in _CODES:
        if isinstance(exc, cls):
            return code
    return "error"
