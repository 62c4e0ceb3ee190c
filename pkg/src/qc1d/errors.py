"""Exception types shared across the package.

Each carries the CLI exit code it maps to.
"""


class QCError(Exception):
    exit_code = 1


class ValidationError(QCError, ValueError):
    """Invalid input geometry or parameters."""

    exit_code = 2

    def __init__(self, message, rule=None):
        super().__init__(message)
        self.rule = rule


class MeshValidationError(ValidationError):
    pass


class DomainError(ValidationError):
    """A bond stretch left the domain of the potential."""

    def __init__(self, message, bond=None):
        super().__init__(message, rule="positive stretch")
        self.bond = bond


class SolverError(QCError, RuntimeError):
    exit_code = 3

    def __init__(self, message, state=None, report=None):
        super().__init__(message)
        self.state = state
        self.report = report


class StabilityLostError(QCError, RuntimeError):
    exit_code = 4

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
