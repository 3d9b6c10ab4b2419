"""Validation of verification run parameters."""
from math import gcd
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from sympy import isprime

from config.logging_config import log
from config.settings import get_settings
from src.core.qorders import is_fundamental


def _default(name: str):
    return lambda: getattr(get_settings(), name)


class VerificationConfig(BaseModel):
    """Parameters of one verification run; unset fields come from Settings."""

    d: int
    c: int = 1
    char_index: int = 1
    prec: int = Field(default_factory=_default("default_prec"))
    coeffs: int = Field(default_factory=_default("default_coeffs"))
    quadrature_tol: float = Field(default_factory=_default("quadrature_tol"))
    primes: List[int] = Field(default_factory=lambda: get_settings().primes_list)
    cache_dir: Optional[str] = None
    output: Optional[str] = None
    skip_petersson: bool = False

    @field_validator("d")
    @classmethod
    def _fundamental(cls, d: int) -> int:
        if not is_fundamental(d):
            raise ValueError(f"{d} is not a negative fundamental discriminant")
        return d

    @field_validator("c")
    @classmethod
    def _conductor(cls, c: int) -> int:
        if c < 1:
            raise ValueError(f"conductor must be at least 1, got {c}")
        return c

    @field_validator("prec")
    @classmethod
    def _precision(cls, prec: int) -> int:
        if prec < 64:
            raise ValueError(f"precision must be at least 64 bits, got {prec}")
        return prec

    @field_validator("coeffs")
    @classmethod
    def _coefficients(cls, coeffs: int) -> int:
        if coeffs < 50:
            raise ValueError(f"coefficient bound must be at least 50, got {coeffs}")
        return coeffs

    @field_validator("char_index")
    @classmethod
    def _character(cls, index: int) -> int:
        if index < 1:
            raise ValueError("character index must be positive (0 is the trivial character)")
        return index

    @model_validator(mode="after")
    def _primes_coprime(self) -> "VerificationConfig":
        level = abs(self.d) * self.c ** 2
        for p in self.primes:
            if not isprime(p):
                raise ValueError(f"{p} is not prime")
            if gcd(p, 6 * level) != 1:
                raise ValueError(f"prime {p} is not coprime to 6N = {6 * level}")
        return self

    @property
    def level(self) -> int:
        return abs(self.d) * self.c ** 2


class InputValidator:
    """Validates raw run parameters."""

    def validate(self, params: Dict) -> Dict[str, object]:
        """
        Validate run parameters.

        Args:
            params: Raw parameters (e.g. from the command line)

        Returns:
            Dictionary with "valid", and "config" or "error"
        """
        try:
            config = VerificationConfig(**{k: v for k, v in params.items() if v is not None})
        except ValidationError as e:
            message = "; ".join(err["msg"] for err in e.errors())
            log.warning(f"Invalid parameters: {message}")
            return {"valid": False, "error": message}
        log.info(f"Parameters validated: d={config.d}, c={config.c}, char={config.char_index}")
        return {"valid": True, "config": config}

    @staticmethod
    def parse_primes(text: Optional[str]) -> Optional[List[int]]:
        """Parse a comma-separated prime list."""
        if text is None:
            return None
        try:
            return [int(p.strip()) for p in text.split(",") if p.strip()]
        except ValueError:
            return None
