"""Closed-loop coverage closure with per-coverbin regression models."""

from coverloop.errors import ConfigError, DataError, DomainError, ParseError

__version__ = "0.1.0"

__all__ = ["ConfigError", "DataError", "DomainError", "ParseError", "__version__"]
