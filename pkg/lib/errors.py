# errors.py
"""
Exception hierarchy for QmeLab.

Library code raises these; main.py is the only place that turns them into
exit codes and console diagnostics.
"""


class QmeLabError(Exception):
    """Base class for every error raised by QmeLab."""

    exit_code = 1


class InvalidInputError(QmeLabError, ValueError):
    """An operation received an input outside its precondition."""

    exit_code = 4


class InvariantViolationError(QmeLabError):
    """A density-matrix invariant was broken while a run was in progress."""

    exit_code = 5


class ConfigError(QmeLabError):
    """
    Base class for configuration problems.

    Args:
        message (str): Human readable description.
        field_path (str, optional): Dotted path of the offending key, e.g. ``cz_errors.lam``.
    """

    exit_code = 4

    def __init__(self, message, field_path=None):
        self.field_path = field_path
        if field_path:
            message = f"{field_path}: {message}"
        super().__init__(message)


class ConfigFileNotFoundError(ConfigError):
    exit_code = 2


class ConfigSyntaxError(ConfigError):
    exit_code = 3


class ConfigValidationError(ConfigError):
    """
    One or more schema violations.

    Every problem found in one pass is kept in ``errors``.
    """

    exit_code = 4

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class OutputError(QmeLabError):
    exit_code = 6


class VerificationFailedError(QmeLabError):
    exit_code = 7
