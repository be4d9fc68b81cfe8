# src/backflow/errors.py

from typing import Optional


class BackflowError(Exception):
    """Base class for every error raised by the backflow library."""


# --- Operator and dimension errors ---

class DimensionMismatch(BackflowError, ValueError):
    pass


class NotHermitian(BackflowError, ValueError):
    pass


class NotADensityOperator(BackflowError, ValueError):
    pass


class DomainError(BackflowError, ValueError):
    """A scalar parameter lies outside its admissible interval."""


# --- Channel inversion ---

class SingularMap(BackflowError):
    """The superoperator is numerically rank deficient (the map is not bijective)."""

    def __init__(self, message: str, sigma_min: float = 0.0, sigma_max: float = 0.0):
        super().__init__(message)
        self.sigma_min = sigma_min
        self.sigma_max = sigma_max


class IllConditioned(BackflowError):
    """The superoperator is invertible but its condition number exceeds the configured limit."""

    def __init__(self, message: str, condition_number: float = float("inf")):
        super().__init__(message)
        self.condition_number = condition_number


# --- Dynamics ---

class IntegrationFailure(BackflowError, RuntimeError):
    pass


class UnknownModel(BackflowError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown model"


# --- Witness construction ---

class DegenerateWeight(BackflowError):
    """The admissible mixing weight collapsed below the configured floor."""


class CertificationFailed(BackflowError):
    pass


class NoObstruction(BackflowError):
    """No kernel direction of Λ_s becomes visible at the later time."""


# --- Configuration ---

class ConfigError(BackflowError, ValueError):
    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}")


class ReportError(BackflowError, ValueError):
    """A run report does not match the documented schema."""
