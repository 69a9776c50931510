"""Exception hierarchy.

``ConfigError`` covers invalid parameters and missing prerequisites (bad
block size, BMW without block metadata, delta out of range). ``DataError``
covers malformed or inconsistent input data (duplicate docids, unparsable
lines, missing run files). The CLI maps the former to exit code 1 and the
latter to exit code 2.
"""


class VarfuseError(Exception):
    """Base class for all package errors."""


class ConfigError(VarfuseError, ValueError):
    """Invalid configuration or a missing precomputed structure."""


class DataError(VarfuseError):
    """Input data that cannot be parsed or violates a data invariant."""
