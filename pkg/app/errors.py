"""
Exception types raised across the toolkit.

Each type also derives from the builtin a caller would naturally catch
(ValueError for bad input, RuntimeError for numerical failure).
"""

from typing import List, Optional


class CasimirError(Exception):
    """Root of every error raised by this package"""


class DomainError(CasimirError, ValueError):
    """Argument outside the domain of an operation"""


class RegionError(CasimirError, ValueError):
    """Invalid Monte Carlo region descriptor"""


class AccuracyError(CasimirError, RuntimeError):
    """An internal accuracy target was not reached"""


class IntegrationError(CasimirError, RuntimeError):
    """Adaptive quadrature failed to converge"""


class DivergenceError(CasimirError, RuntimeError):
    """A required integral does not exist for the given input"""


class DiagonalizationError(CasimirError, RuntimeError):
    """Quadratic form is not positive definite"""


class FitError(CasimirError, RuntimeError):
    """Autocorrelation fit failed"""


class ConfigError(CasimirError, ValueError):
    """Malformed run configuration or input file; carries every problem found"""

    def __init__(self, problems, source: Optional[str] = None):
        if isinstance(problems, str):
            problems = [problems]
        self.problems: List[str] = list(problems)
        self.source = source
        prefix = f"{source}: " if source else ""
        super().__init__(prefix + "; ".join(self.problems))
