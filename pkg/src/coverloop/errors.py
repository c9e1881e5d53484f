"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid plan, constraint, covergroup or CLI configuration."""


class DataError(ValueError):
    """Numerical input that a model cannot be fitted on."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ParseError(ValueError):
    """Malformed artifact file. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
