"""Exception types raised across the package."""


class IEQDGError(Exception):
    pass


class ConfigError(IEQDGError, ValueError):
    """Invalid mesh, basis, boundary or experiment configuration."""


class ContractError(IEQDGError, ValueError):
    """An operation was called on an object outside its domain (e.g. wrong face kind)."""


class NumericError(IEQDGError, ArithmeticError):
    """Non-finite or non-positive data where finite/positive values are required."""


class DomainError(NumericError):
    """Phi(w) + B <= 0 at some quadrature node."""


class SolverError(IEQDGError, RuntimeError):
    """Linear solve failed to reach its residual target."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class ConvergenceError(IEQDGError, RuntimeError):
    """Outer (nonlinear) iteration exceeded its budget."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class EnergyViolation(IEQDGError, AssertionError):
    """Discrete energy increased or the energy identity failed to hold."""
