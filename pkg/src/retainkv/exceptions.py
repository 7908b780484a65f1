"""Domain exceptions.

Every error raised on purpose by retainkv derives from :class:`RetainKVError`. The class
carries the process exit code the command-line surface reports for it, so that library
code never has to know about exit codes and the CLI never has to know about call sites.
"""


class RetainKVError(Exception):
    """Base class for domain errors. ``kind`` names the error in machine-readable output."""

    exit_code: int = 1
    kind: str = "error"


class ConfigError(RetainKVError):
    """A configuration cannot describe a valid run (shapes, budgets, unknown keys)."""

    exit_code = 2
    kind = "config_error"


class DataError(RetainKVError):
    """An input file or in-memory input is malformed."""

    exit_code = 3
    kind = "data_error"


class ShapeError(DataError):
    """Array dimensions disagree."""

    kind = "shape_error"


class PositionOverflowError(ShapeError):
    kind = "position_overflow"


class ContractViolation(RetainKVError):
    """A caller broke an operation's precondition or a runtime invariant failed."""

    exit_code = 3
    kind = "contract_violation"


class EvaluationError(RetainKVError):
    """A function under numerical evaluation returned a non-finite value."""

    kind = "evaluation_error"
