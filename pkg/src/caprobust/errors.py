"""Exception hierarchy shared by all modules."""


class CapRobustError(Exception):
    """Base class for package errors."""


class InvalidParameterError(CapRobustError, ValueError):
    """A numeric parameter is outside its admissible range."""


class DataValidationError(CapRobustError, ValueError):
    """Input data violates a type invariant."""


class ModelBuildError(CapRobustError):
    """An optimization model could not be assembled from the inputs."""


class ConfigurationError(CapRobustError):
    """The requested solver backend is unavailable or misconfigured."""


class SolverError(CapRobustError):
    """A solve ended without an optimal solution.

    ``status`` is the backend status string; ``diagnostics`` maps constraint
    group names to the total slack an elastic re-solve needed in that group
    (empty when no diagnosis was run).
    """

    def __init__(self, message, status=None, diagnostics=None, tag=None):
        super().__init__(message)
        self.status = status
        self.diagnostics = dict(diagnostics or {})
        self.tag = tag

    def __reduce__(self):  # keep status and diagnostics across process boundaries
        return (type(self), (self.args[0] if self.args else "", self.status, self.diagnostics, self.tag))

    def __str__(self):
        msg = super().__str__()
        if self.tag is not None:
            msg = f"[{self.tag}] {msg}"
        if self.diagnostics:
            worst = sorted(self.diagnostics.items(), key=lambda kv: -kv[1])[:5]
            msg += " (violated groups: " + ", ".join(f"{k}={v:.4g}" for k, v in worst) + ")"
        return msg
