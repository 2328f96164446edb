# errors.py
"""Exception types shared by the library and the command-line front end.

Every error carries the process exit code the CLI reports for it.
"""


class KoopmanError(Exception):
    exit_code = 1


class ConfigError(KoopmanError, ValueError):
    exit_code = 2


class SequenceInvalidError(KoopmanError, ValueError):
    exit_code = 2


class ModelInvalidError(KoopmanError, ValueError):
    exit_code = 3


class ModelParseError(ModelInvalidError):
    exit_code = 3

    def __init__(self, message: str, path=None, line: int = None, column: int = None):
        where = ""
        if path is not None:
            where = f"{path}"
        if line is not None:
            where += f" (line {line} column {column})" if column is not None else f" (line {line})"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line
        self.column = column


class NumericError(KoopmanError, ArithmeticError):
    exit_code = 4

    def __init__(self, message: str, action: int = None):
        self.reason = message
        if action is not None:
            message = f"{message} (action index {action})"
        super().__init__(message)
        self.action = action


class SolveAborted(NumericError):
    """Sampler run stopped on a numeric error; `partial` holds what was collected."""

    def __init__(self, message: str, partial=None, action: int = None):
        super().__init__(message, action=action)
        self.partial = partial


class RelaxationDiverged(NumericError):
    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = history or []


class EnumerationRefused(KoopmanError, RuntimeError):
    exit_code = 5

    def __init__(self, count: int, cap: int, what: str = "sequences"):
        super().__init__(f"refusing to enumerate {count} {what} (cap is {cap})")
        self.count = count
        self.cap = cap


class NoUniqueStationary(KoopmanError, RuntimeError):
    exit_code = 1


class DatasetError(KoopmanError, ValueError):
    exit_code = 6


class UnderdeterminedFit(DatasetError):
    def __init__(self, action, available: int, required: int):
        super().__init__(
            f"action {action!r} has {available} transitions, at least {required} are needed"
        )
        self.action = action
        self.available = available
        self.required = required


class RankDeficientFit(UserWarning):
    pass


class BasisError(DatasetError):
    pass
