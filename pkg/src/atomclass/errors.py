"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A configuration value is outside its valid range."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class NumericalError(ArithmeticError):
    """A numerical kernel failed (singular matrix, non-finite objective, ...)."""


class UnsupportedConfiguration(ValueError):
    """The requested combination of options is not supported."""


class StageError(RuntimeError):
    """Wraps a failure with the pipeline stage it occurred in."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
