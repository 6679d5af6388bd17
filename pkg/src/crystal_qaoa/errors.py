"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class ResourceLimitError(RuntimeError):
    """A request would exceed a configured size or memory limit."""


class NumericalFailureError(ArithmeticError):
    """An objective evaluated to a non-finite value."""


class FormatError(ValueError):
    """A JSON input file is malformed. The message names the offending field."""
