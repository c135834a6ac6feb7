class PrudentWalkError(Exception):
    """Base class for library errors."""


class DomainError(PrudentWalkError, ValueError):
    pass


class PreconditionError(PrudentWalkError, ValueError):
    pass


class CapacityError(PrudentWalkError):
    """Raised when a request exceeds a configured size budget."""


class DivergenceError(PrudentWalkError, ArithmeticError):
    pass


class SolverError(PrudentWalkError, RuntimeError):
    pass


class RejectionStall(PrudentWalkError, RuntimeError):
    pass
