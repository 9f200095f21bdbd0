import logging
import re
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from jpwalks.errors import InvalidParams, ResonantParams

logger = logging.getLogger(__name__)

RATIONAL_PATTERN = re.compile(r"^\s*[+-]?(\d+(/\d+)?|\d*\.\d+|\d+\.\d*)\s*$")


def parse_rational(s: str) -> Fraction:
    """Parse "p/q", an integer or a finite decimal into an exact rational."""
    if RATIONAL_PATTERN.match(s) is None:
        raise InvalidParams(f'"{s}" is not a rational number of the form p/q')
    try:
        return Fraction(s.strip())
    except ZeroDivisionError:
        raise InvalidParams(f'"{s}" has a zero denominator')


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def to_mpf(q: Fraction | int) -> mpmath.mpf:
    q = Fraction(q)
    return mpmath.mpf(q.numerator) / q.denominator


@dataclass(frozen=True)
class JPParams:
    alpha: Fraction
    beta: Fraction
    gamma: Fraction

    def __post_init__(self):
        for name, value in (("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)):
            if not isinstance(value, Fraction):
                object.__setattr__(self, name, Fraction(value))
            if value <= -1:
                raise InvalidParams(f"{name} = {value} must exceed -1")

    @staticmethod
    def from_strings(alpha: str, beta: str, gamma: str):
        return JPParams(parse_rational(alpha), parse_rational(beta), parse_rational(gamma))

    def weight_exponent(self, a: int) -> Fraction:
        match a:
            case 1:
                return self.alpha
            case 2:
                return self.beta
            case _:
                raise ValueError(f"Weight label {a} is not 1 or 2.")

    @property
    def is_perfect(self):
        return (self.alpha - self.beta).denominator != 1

    @property
    def in_positivity_region(self):
        return self.is_perfect and abs(self.alpha - self.beta) < 1

    def require_perfect(self):
        if not self.is_perfect:
            raise ResonantParams(self.alpha, self.beta)

    def beta_constant(self, a: int, precision: int) -> mpmath.mpf:
        """Total mass of x^alpha_a (1-x)^gamma on [0, 1]."""
        exponent = self.weight_exponent(a)
        with mpmath.workprec(precision):
            return mpmath.beta(to_mpf(exponent + 1), to_mpf(self.gamma + 1))

    def as_strings(self):
        return {
            "alpha": format_rational(self.alpha),
            "beta": format_rational(self.beta),
            "gamma": format_rational(self.gamma),
        }

    def __str__(self):
        return f"(alpha={self.alpha}, beta={self.beta}, gamma={self.gamma})"


RECURRENT_EXAMPLE = JPParams(Fraction(-1, 4), Fraction(-1, 2), Fraction(-1, 2))
TRANSIENT_EXAMPLE = JPParams(Fraction(-1, 4), Fraction(-1, 2), Fraction(1, 2))
