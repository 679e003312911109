from typing import Optional


class EWGeometryError(Exception):
    """Base class for every error raised by the library"""

    exit_code = 1


class InvalidParameters(EWGeometryError, ValueError):
    """Inputs outside an operation's domain (invalid point, bad dimension, bad step)"""

    exit_code = 2


class ConfigParse(EWGeometryError, ValueError):
    """Malformed region spec, point document or CSV"""

    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field:
            location.append(f"field '{field}'")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class NonConvergence(EWGeometryError):
    """Estimator or quadrature could not reach a usable result"""

    exit_code = 3


class BoundarySingularity(EWGeometryError, ArithmeticError):
    """Metric or volume element evaluated on the singular boundary of the state space"""

    exit_code = 4


class DegenerateSpectrum(EWGeometryError, ArithmeticError):
    """Some eigenvalue pair sum is too small for the direct metric formula"""

    exit_code = 5


class ConsistencyError(EWGeometryError, RuntimeError):
    """An internal algebraic invariant failed; indicates a construction bug"""

    exit_code = 6
