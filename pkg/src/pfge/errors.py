"""Exception hierarchy shared across the package.

Every failure surfaced to callers carries enough type information for the
command-line harness to map it onto a stable exit code: configuration and
argument errors, data-format and I/O errors, and numeric failures.
"""


class PfgeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(PfgeError):
    """Invalid configuration: bad hyperparameters, violated budget divisibility,
    malformed config documents."""


class ShapeError(ConfigurationError):
    """Mismatched array shapes or incompatible layer specifications."""


class InvalidArgumentError(PfgeError, ValueError):
    """A call violated an operation's precondition."""


class DataFormatError(PfgeError):
    """Unparsable or inconsistent data file (CSV, IDX, checkpoint)."""


class NumericError(PfgeError):
    """A non-finite loss or weight appeared during training."""


# Exit codes used by the CLI.
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code contract."""
    if isinstance(exc, (ConfigurationError, InvalidArgumentError)):
        return EXIT_CONFIG
    if isinstance(exc, (DataFormatError, OSError)):
        return EXIT_IO
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    return 1
