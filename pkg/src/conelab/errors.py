"""Exception hierarchy shared by all conelab modules.

Two broad families matter for the CLI exit-code contract: configuration
problems (bad geometry, bad parameters, unparseable scenario files) and
domain failures that occur while an otherwise valid computation runs
(instability, vanished cones, quadrature breakdown).
"""


class ConelabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ConelabError):
    """Invalid setup: geometry that does not fit the grid, bad parameters."""


class DomainError(ConelabError):
    """A valid computation entered a forbidden regime at run time."""


class ConeVanishedError(DomainError):
    """A contracting cone slice was requested at or past its vanishing time."""


class ShapeMismatchError(DomainError):
    """Field/state shapes or grids are incompatible for the operation."""


class InstabilityError(DomainError):
    """Numerical blow-up (NaN/Inf or norm growth) detected during stepping."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class PreconditionError(DomainError):
    """An operation's documented precondition was violated by the inputs."""


class QuadratureError(DomainError):
    """A momentum-space quadrature failed its internal convergence check."""


class InvalidStateError(DomainError):
    """A quantum state object violates its defining inequalities."""
