"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: UsageError -> 1,
DataError -> 2, NumericalError -> 3. Anything else is a bug.
"""


class CmfuseError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(CmfuseError):
    """Caller misuse: bad arguments, inconsistent inputs, wrong mode."""


class DataError(CmfuseError):
    """Bad input data or on-disk format: missing columns, corrupt files."""


class NumericalError(CmfuseError):
    """Numerical failure: divergence, non-finite gradients, failed checks."""
