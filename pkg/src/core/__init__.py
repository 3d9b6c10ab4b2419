"""Core module package."""
from .cache import ResultCache
from .input_validator import InputValidator, VerificationConfig
from .report import CheckRecord, ReportFormatter, VerificationReport
from .verification import VerificationEngine

__all__ = [
    "ResultCache",
    "InputValidator",
    "VerificationConfig",
    "CheckRecord",
    "ReportFormatter",
    "VerificationReport",
    "VerificationEngine",
]
