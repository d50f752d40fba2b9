"""Exception hierarchy.

Every error carries an ``exit_code`` used by the CLI: 2 for configuration
problems, 3 for bad input data, 4 for numerical failures.
"""


class NaiveLassoError(Exception):
    exit_code = 4


class ConfigError(NaiveLassoError):
    exit_code = 2


class DataError(NaiveLassoError, ValueError):
    exit_code = 3


class NumericalError(NaiveLassoError, ArithmeticError):
    exit_code = 4


class ConfigInvalid(ConfigError):
    pass


class IoError(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class ConstantColumn(DataError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column!r} is constant")


class NonFinite(DataError):
    pass


class MalformedCsv(DataError):
    def __init__(self, line, detail=""):
        self.line = line
        msg = f"malformed CSV at line {line}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class TooFewRows(DataError):
    pass


class InsufficientData(DataError):
    pass


class EmptyInput(DataError):
    pass


class EmptySet(DataError):
    pass


class OutOfDomain(DataError):
    pass


class InfeasibleDensity(DataError):
    pass


class TooManySelected(DataError):
    pass


class SingularSubmatrix(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class DegenerateResidual(NumericalError):
    pass


class DegenerateDenominator(NumericalError):
    pass


class ZeroSignal(NumericalError):
    pass
