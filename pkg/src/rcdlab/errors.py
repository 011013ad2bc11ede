"""Exception types shared by the library and the scenario harness."""


class RcdlabError(Exception):
    """Base error carrying a machine-readable ``code``."""

    code = "error"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code


class InvalidSpaceError(RcdlabError, ValueError):
    code = "invalid_space"


class InvalidParameterError(RcdlabError, ValueError):
    code = "invalid_parameter"


class PreconditionError(RcdlabError):
    """Raised when an experiment precondition is checked and found false.

    ``vertex`` names the offending vertex when there is one.
    """

    code = "precondition_failed"

    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class SolverError(RcdlabError):
    code = "solver_failure"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ScenarioError(RcdlabError):
    code = "validation_error"
