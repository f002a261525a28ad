"""Exception taxonomy shared across the package.

Each class maps to a fixed CLI exit code so shell-level harnesses can
assert on the failure category.
"""


class FruitgradeError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(FruitgradeError):
    """Bad configuration: unknown key, type mismatch, invariant violation."""

    exit_code = 2


class DataError(FruitgradeError):
    """Bad input data: undecodable image, malformed CSV, missing sample."""

    exit_code = 3


class NumericError(FruitgradeError):
    """Numerical failure: non-finite intermediate, singular problem."""

    exit_code = 4


class StorageError(FruitgradeError):
    """I/O and container-format failures."""

    exit_code = 5
