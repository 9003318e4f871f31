"""Exception hierarchy shared by all modules."""


class BenchmarkError(Exception):
    """Base class for every error raised by :mod:`bnpricing`."""


class InputError(BenchmarkError, ValueError):
    """Invalid caller input (maps to CLI exit code 2)."""


class NumericalError(BenchmarkError, ArithmeticError):
    """Internal numerical failure (maps to CLI exit code 3)."""


class DimensionMismatch(InputError):
    pass


class DomainError(InputError):
    pass


class NoGop(InputError):
    """(mu; 1) is not in the image of the block matrix."""


class NoLrp(InputError):
    """Every kernel vector of sigma^T is orthogonal to the ones vector."""


class NoExtendedGop(InputError):
    pass


class Degenerate(InputError):
    """The new account is replicable but its drift does not match."""


class InconsistentMarket(NumericalError):
    pass


class TooShort(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class NonPositiveValue(ParseError):
    pass


class NonMonotoneTime(ParseError):
    pass


class FitFailed(InputError):
    pass


class StepTooLarge(NumericalError):
    pass


class SeriesContractMismatch(InputError):
    pass
