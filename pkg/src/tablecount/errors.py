"""Exception types raised across the package."""


class TableCountError(Exception):
    """Base class for all package errors."""


class MarginsError(TableCountError, ValueError):
    pass


class SumMismatch(MarginsError):
    pass


class EmptyMargins(MarginsError):
    pass


class DomainError(TableCountError, ValueError):
    """A special function was evaluated outside its domain."""


class GammaPole(DomainError):
    """A gamma-function argument landed exactly on a pole."""


class DegenerateK(TableCountError):
    pass


class NoConvergence(TableCountError):
    def __init__(self, max_iter, row_residual, col_residual):
        self.max_iter = max_iter
        self.row_residual = row_residual
        self.col_residual = col_residual
        super().__init__(
            f"no convergence after {max_iter} iterations "
            f"(row residual {row_residual:.3e}, col residual {col_residual:.3e})"
        )


class SingularQ(TableCountError):
    pass


class Infeasible(TableCountError):
    pass


class TooLarge(TableCountError):
    pass


class InvalidCell(TableCountError, ValueError):
    pass
