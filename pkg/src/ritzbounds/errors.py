"""Exception types shared across the package."""


class ContractError(ValueError):
    """Inputs violate an operation's preconditions (shapes, parameter ranges)."""


class ParseError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(ArithmeticError):
    """Base class for numerical failures (CLI exit code 2)."""


class NotPositiveDefiniteError(NumericalError):
    def __init__(self, index, pivot=None):
        self.index = index
        self.pivot = pivot
        msg = f"matrix is not positive definite (pivot {index}"
        if pivot is not None:
            msg += f" = {pivot:.3e}"
        super().__init__(msg + ")")


class RankDeficiencyError(NumericalError):
    def __init__(self, rank, expected):
        self.rank = rank
        self.expected = expected
        super().__init__(f"numerical rank {rank} is below the required {expected}")


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)
