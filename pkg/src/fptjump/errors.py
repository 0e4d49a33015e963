"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A quadrature, series or sampler failed to converge."""


class ConfigSyntaxError(ValueError):
    """Malformed line in a run configuration."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class ConfigSemanticError(ValueError):
    """Well-formed configuration with an invalid value."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class UsageError(ValueError):
    """An operation was called with inputs it cannot work with (for example, empty samples)."""
