"""Exception hierarchy shared by every fastgcrnn module."""


class FastGcrnnError(Exception):
    """Base class; the CLI turns these into exit code 1."""


class ShapeError(FastGcrnnError, ValueError):
    pass


class NumericError(FastGcrnnError, ArithmeticError):
    pass


class InputError(FastGcrnnError, ValueError):
    """Malformed or inconsistent user input (graphs, records, configs)."""


class OutOfRangeError(InputError):
    pass


class EmptyDatasetError(InputError):
    pass


class InsufficientHistoryError(InputError):
    pass


class TrainingError(FastGcrnnError, RuntimeError):
    pass


class CacheError(FastGcrnnError, RuntimeError):
    """Backward pass invoked without the matching forward cache."""
