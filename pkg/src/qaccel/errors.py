"""Exception hierarchy shared by all modules."""


class QaccelError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(QaccelError, ValueError):
    """Input violates a documented precondition."""


class CapacityError(QaccelError):
    """Problem size exceeds a configured limit (qubits, QUBO variables)."""


class DegenerateModelError(QaccelError):
    """A decoded model has no support vectors."""


class BackendError(QaccelError):
    """Execution failed on a backend; carries the index of the failing circuit."""

    def __init__(self, message, index=None, partial=None):
        super().__init__(message)
        self.index = index
        self.partial = partial
