"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so library code should raise
the most specific one that applies.
"""


class ParameterError(ValueError):
    """A configuration or parameter value is out of its documented domain."""


class SpecError(ValueError):
    """An experiment description (CLI flags or JSON config) failed validation."""


class MalformedLogError(ValueError):
    """A transmission log violates its structural contract."""


class NumericError(ArithmeticError):
    """A quadrature or root-finding step failed to converge.

    Carries the raw diagnostics so the failure can be reported instead of
    silently propagating a bad value.
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class AcceptanceFailure(RuntimeError):
    """A comparison run finished but at least one point missed its threshold."""
