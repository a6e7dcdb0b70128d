"""Exception hierarchy.

Two families are distinguished because the CLI maps them to different exit
codes: :class:`ValidationError` for bad inputs (caught before any heavy
computation) and :class:`ComputationError` for failures inside a numerical
routine.
"""


class FriedelError(Exception):
    """Base class for all package errors.

    ``module`` names the raising module; messages are written as
    ``"<module>: ..."`` and the prefix is used when the class sets none.
    """

    module = "friedelsum"

    def __init__(self, *args):
        super().__init__(*args)
        if type(self).module == "friedelsum" and args and isinstance(args[0], str):
            head, sep, _ = args[0].partition(": ")
            if sep and head.isidentifier():
                self.module = head


class ValidationError(FriedelError, ValueError):
    """An input violates a documented precondition or invariant."""


class ParseError(ValidationError):
    """A potential document could not be parsed."""

    module = "potential"

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ComputationError(FriedelError, RuntimeError):
    """A numerical routine could not deliver its postcondition."""


class StepTooLargeError(ValidationError):
    module = "radial"


class GridMismatchError(ValidationError):
    module = "radial"


class MatchingError(ComputationError):
    """Phase shifts extracted at two matching radii disagree."""

    module = "phaseshift"


class UnwrapError(ComputationError):
    """The continuous branch of a phase-shift curve could not be certified."""

    module = "phaseshift"

    def __init__(self, message, interval=None):
        self.interval = interval
        if interval is not None:
            message = f"{message} (k in [{interval[0]!r}, {interval[1]!r}])"
        super().__init__(message)


class ToleranceNotReachedError(ComputationError):
    module = "boundstates"


class BudgetError(ComputationError):
    module = "finitebox"
