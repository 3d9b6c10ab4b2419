"""Exception hierarchy for StarkCheck."""
from typing import Optional


class StarkCheckError(Exception):
    """Base class for all StarkCheck errors."""


class InputError(StarkCheckError):
    """Invalid discriminant, conductor, character index or option."""

    exit_code = 2


class DomainError(StarkCheckError):
    """Argument outside the domain of a function (e.g. Im tau <= 0)."""


class PoleError(StarkCheckError):
    """Evaluation requested exactly at a pole."""

    def __init__(self, message: str, residue: Optional[object] = None):
        super().__init__(message)
        self.residue = residue


class PrecisionError(StarkCheckError):
    """A numerical step could not reach its tolerance at the working precision."""


class TruncationError(StarkCheckError):
    """A truncated series or quadrature cannot meet the requested bound."""

    def __init__(self, message: str, achieved: Optional[float] = None):
        super().__init__(message)
        self.achieved = achieved


class ResolutionError(StarkCheckError):
    """A discrete Fourier extraction is aliased above its noise floor."""


class RecognitionError(StarkCheckError):
    """A floating value could not be recognised as an exact algebraic quantity."""


class AuxiliaryPrimeError(StarkCheckError):
    """The auxiliary prime makes the denominator 1 - xi(l-bar) vanish."""


class RamifiedPrimeError(StarkCheckError):
    """The prime ramifies in the ring class field, or no prime above it can be reached from the minimal polynomial."""


class CacheCorruptionError(StarkCheckError):
    """A cache entry failed its checksum or could not be decoded."""
