"""Exception hierarchy.

Validation problems (bad inputs, unsupported combinations) derive from
:class:`ValidationError`; numerical failures (non-convergence, ill
conditioning, tolerance misses) derive from :class:`NumericalError`.  The
CLI maps the former to exit code 2 and the latter to exit code 1.
"""


class FintError(Exception):
    pass


class ValidationError(FintError, ValueError):
    pass


class NumericalError(FintError, ArithmeticError):
    pass


class DomainError(ValidationError):
    """A time or point lies outside the domain of a path or integrand."""


class IncompatibleGridError(ValidationError):
    pass


class UnsupportedCombinationError(ValidationError):
    pass


class ConfigurationError(ValidationError):
    pass


class SpecError(ValidationError):
    """An integrator specification violates an integrability precondition."""


class DivergenceError(ValidationError):
    pass


class IntegrandError(NumericalError):
    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class IllConditionedError(NumericalError):
    pass


class NonConvergenceError(NumericalError):
    pass


class ToleranceError(NumericalError):
    pass
