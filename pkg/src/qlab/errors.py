"""Exception hierarchy shared by every qlab module."""


class QLabError(Exception):
    """Base class for all qlab failures."""


class DomainError(QLabError, ValueError):
    """An argument lies outside the domain where the formulas make sense."""


class IntegrationError(QLabError, RuntimeError):
    """The ODE integrator could not complete the requested interval."""


class BlowUpError(IntegrationError):
    """The profile left the admissible band 0 < v < v_max."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class StepSizeUnderflowError(IntegrationError):
    """The adaptive step size collapsed below floating point resolution."""


class ConvergenceError(QLabError, RuntimeError):
    """An iterative solver (shooting, root finding, fitting) did not converge."""
