"""Exception types raised by the numerical routines."""


class LevySchauderError(Exception):
    """Base class for all errors raised by this package."""


class QuadratureDivergence(LevySchauderError):
    """Shell sums of a Lévy-measure integral failed the Cauchy criterion."""


class AliasingError(LevySchauderError):
    """Frequency content is not resolved by the lattice (enlarge N or shrink L)."""


class DegenerateFit(LevySchauderError):
    """A log-log fit was requested on too few or non-positive values."""


class OutOfDomain(LevySchauderError):
    """A difference stencil left the sampled lattice."""


class MissingDerivative(LevySchauderError):
    """A derivative needed by a norm was not supplied."""


class BudgetExceeded(LevySchauderError):
    """Quadrature error budget exceeds the requested tolerance."""


class IdentityViolation(LevySchauderError):
    """An internal identity check (e.g. the resolvent equation) failed."""


class ConfigError(LevySchauderError):
    """Invalid experiment configuration."""
