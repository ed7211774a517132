"""Exception hierarchy shared across the toolkit.

Every error raised on purpose derives from ToolkitError, so the command
line layer can map failures onto stable exit codes without matching on
message text.
"""


class ToolkitError(Exception):
    """Base class for all toolkit failures."""

    exit_code = 1


class ConfigError(ToolkitError):
    """Invalid, missing, or contradictory configuration."""

    exit_code = 2


class DataError(ToolkitError):
    """Malformed or insufficient input data (bad dates, unknown columns,
    non-positive prices, series too short)."""

    exit_code = 3


class NumericError(ToolkitError):
    """Numerical failure during computation (degenerate variance,
    diverging training loss, undefined estimate)."""

    exit_code = 4


class DegenerateDataError(NumericError):
    """A nearest-neighbour radius collapsed to zero because of duplicate
    points. Apply a small deterministic jitter to the inputs (see
    teflow.ksg.jitter) and re-run."""
