"""Exception hierarchy shared by all gpcal modules.

The CLI maps these onto distinct exit codes (see ``gpcal.cli``):
config/input problems, file schema/parse problems, and numerical
failures are reported separately.
"""


class GpcalError(Exception):
    """Base class for all errors raised by gpcal."""


class InputError(GpcalError):
    """A caller passed rejected input (bad shape, non-finite value,
    invalid level, degenerate data)."""


class ConfigError(GpcalError):
    """A configuration object or file is invalid or inconsistent."""


class SchemaError(GpcalError):
    """A file does not match its expected format (missing file, missing
    column, unknown model version)."""


class ParseError(SchemaError):
    """A specific row or cell of a file could not be parsed or violates
    a value invariant. Carries the file location in the message."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class NumericalError(GpcalError):
    """A numerical operation failed (covariance factorization not
    positive definite even after the jitter retry)."""

    def __init__(self, message, jitter=None):
        super().__init__(message)
        self.jitter = jitter
