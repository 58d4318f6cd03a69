"""Python bindings for the gpuburst simulator."""

from ._core import (
    Error,
    IoError,
    ParseError,
    ValidationError,
    parse_scenario,
    report,
    simulate,
    validate,
)

__all__ = [
    "Error",
    "IoError",
    "ParseError",
    "ValidationError",
    "parse_scenario",
    "report",
    "simulate",
    "validate",
]
