"""Exception hierarchy shared by all modules."""


class ViscosityLabError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(ViscosityLabError, ValueError):
    """Invalid resolution, parameter, or experiment configuration."""


class MultivaluednessError(ViscosityLabError):
    """A boundary antiderivative would not be single valued."""

    def __init__(self, message, circulation=None):
        super().__init__(message)
        self.circulation = circulation


class CompatibilityError(ViscosityLabError):
    """Input data violate a compatibility condition (flux, Saint-Venant, d-bar)."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InconsistencyError(ViscosityLabError):
    """Recovered quantities disagree with the data they should reproduce."""


class SolverError(ViscosityLabError):
    """A discrete solve failed; carries a condition estimate when available."""

    def __init__(self, message, condition=None, history=None):
        super().__init__(message)
        self.condition = condition
        self.history = history if history is not None else []


class PicardDivergenceError(SolverError):
    """Fixed-point iteration for the Navier-Stokes system did not contract."""
