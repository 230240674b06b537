"""Exception types shared across the package."""


class PslipError(Exception):
    """Base class for all errors raised by pslip."""


class ValidationError(PslipError, ValueError):
    """Invalid parameters or configuration."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DomainError(PslipError, ValueError):
    """Argument outside the range where a quantity is defined."""


class BranchCutError(PslipError, ValueError):
    """Evaluation on a branch cut without a side prescription."""


class PoleError(PslipError, ArithmeticError):
    """Evaluation too close to a pole."""

    def __init__(self, message, pole=None):
        super().__init__(message)
        self.pole = pole


class DivergenceError(PslipError, ArithmeticError):
    """A quantity diverges at the requested point."""


class ConvergenceError(PslipError, ArithmeticError):
    """Series evaluated outside its convergence strip."""

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class TruncationError(PslipError, ArithmeticError):
    """Fourier truncation too coarse for the requested accuracy."""

    def __init__(self, message, residual=None, n_max=None):
        super().__init__(message)
        self.residual = residual
        self.n_max = n_max


class BracketError(PslipError, ArithmeticError):
    """Root finder could not bracket a sign change."""


class StripExitError(ConvergenceError):
    """Instanton root left the convergence strip."""


class ValidityWarning(UserWarning):
    """Result computed outside the regime where the approximation is trusted."""
