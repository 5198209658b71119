class WSBError(Exception):
    """Base class for toolkit errors."""


class DomainError(WSBError, ValueError):
    """Input outside the domain of an operation."""


class SingularityError(DomainError):
    """State inside the collision guard of a primary."""


class IntegrationError(WSBError, RuntimeError):
    """Step-size underflow or another hard integrator failure."""


class CollisionError(WSBError):
    """Propagation entered the collision guard."""


class NoReturnError(WSBError):
    """No section return before the time cap."""


class EscapeError(WSBError):
    """Trajectory left the P2 region before returning to the section."""


class BracketError(DomainError):
    """Both bracket endpoints classify identically."""


class OffSectionError(DomainError):
    """No real positive angular rate satisfies the Jacobi relation."""


class ConvergenceError(WSBError):
    """An iterative corrector failed to converge."""
