from src.core.point import EWPoint, SphericalPoint, PARAMETER_NAMES, to_spherical, to_cartesian
from src.core.spectrum import Multiplicities, Spectrum, SpectrumEntry, multiplicities, spectrum, maximally_mixed
from src.utils.validators import ValidationResult, validate, validate_with_slack

__all__ = [
    "EWPoint", "SphericalPoint", "PARAMETER_NAMES", "to_spherical", "to_cartesian",
    "Multiplicities", "Spectrum", "SpectrumEntry", "multiplicities", "spectrum", "maximally_mixed",
    "ValidationResult", "validate", "validate_with_slack",
]
