"""Exception hierarchy.

Errors fall in three families that the command line maps to exit codes:
``DataError`` (bad pages, files, checkpoints), ``NumericError`` (non-finite
values during training) and ``ConfigError`` (bad hyperparameters).
"""


class PageGnnError(Exception):
    pass


class DataError(PageGnnError):
    pass


class NumericError(PageGnnError):
    pass


class ConfigError(PageGnnError, ValueError):
    pass


class EmptyDocument(DataError):
    pass


class IndexOutOfRange(DataError, IndexError):
    pass


class IdOutOfRange(DataError, IndexError):
    pass


class DimMismatch(DataError, ValueError):
    pass


class MissingPage(DataError, KeyError):
    def __str__(self):
        return f"no external embedding for page {self.args[0]!r}"


class UnknownLabel(DataError, KeyError):
    pass


class CorruptCheckpoint(DataError):
    pass


class ClassTooSmall(DataError):
    pass


class EmptyMatrix(DataError, ValueError):
    pass


class ShapeMismatch(PageGnnError, ValueError):
    pass


class UnitOverflow(PageGnnError, ValueError):
    pass


class EmptyGraph(PageGnnError, ValueError):
    pass


class BatchTooSmall(PageGnnError, ValueError):
    pass


class ClassOutOfRange(PageGnnError, IndexError):
    pass


class NonFiniteGradient(NumericError, FloatingPointError):
    pass
