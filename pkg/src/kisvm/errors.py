"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line can map failures
to its documented codes without a lookup table.
"""


class KisvmError(Exception):
    exit_code = 1


class ConfigurationError(KisvmError):
    exit_code = 2


class DataError(KisvmError):
    exit_code = 3


class ShapeError(DataError, ValueError):
    """Ragged input or mismatched dimensions."""


class ValidationError(DataError, ValueError):
    pass


class DegenerateTask(DataError):
    """A binary task with only one label present, or an all-zero dual."""


class MissingColumn(DataError, KeyError):
    def __init__(self, column, path=None):
        self.column = column
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"missing column {column!r}{where}")

    def __str__(self):
        return self.args[0]


class CsvParseError(DataError):
    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        super().__init__(message)


class ChecksumError(DataError):
    pass


class VersionError(DataError):
    pass


class ConvergenceError(KisvmError):
    """Raised when SMO exhausts its iteration budget.

    The best iterate found so far is attached as ``solution`` and the
    remaining KKT violation as ``violation``.
    """

    exit_code = 4

    def __init__(self, message, solution=None, violation=float("nan")):
        super().__init__(message)
        self.solution = solution
        self.violation = violation
