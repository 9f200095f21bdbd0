from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import override

import mpmath
import sympy
from sympy.polys.domains import QQ

from jpwalks.errors import PrecisionLoss
from jpwalks.params import format_rational, to_mpf

X = sympy.Symbol("x")


def rising(x: Fraction, n: int) -> Fraction:
    """Pochhammer symbol (x)_n over the rationals."""
    return reduce(lambda acc, i: acc * (x + i), range(n), Fraction(1))


def factor_ratio(numerator: Iterable[Fraction], denominator: Iterable[Fraction]) -> Fraction:
    """Product of linear factors, equal factors cancelled before dividing."""
    remaining = list(denominator)
    value = Fraction(1)
    for factor in numerator:
        if factor in remaining:
            remaining.remove(factor)
        else:
            value *= factor
    for factor in remaining:
        value /= factor
    return value


def _strip(coeffs: Sequence[Fraction]) -> tuple[Fraction, ...]:
    end = len(coeffs)
    while end > 0 and coeffs[end - 1] == 0:
        end -= 1
    return tuple(coeffs[:end])


@dataclass(frozen=True)
class RationalPoly:
    # ascending degree
    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _strip([Fraction(c) for c in self.coeffs]))

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def leading(self):
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def is_monic(self):
        return self.leading == 1

    def coefficient(self, k: int):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    def __call__(self, x: Fraction | mpmath.mpf):
        if isinstance(x, Fraction | int):
            acc = Fraction(0)
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        acc = mpmath.mpf(0)
        for c in reversed(self.coeffs):
            acc = acc * x + to_mpf(c)
        return acc

    def __add__(self, other: "RationalPoly"):
        n = max(len(self.coeffs), len(other.coeffs))
        return RationalPoly(tuple(self.coefficient(k) + other.coefficient(k) for k in range(n)))

    def __sub__(self, other: "RationalPoly"):
        return self + other.scale(Fraction(-1))

    def __mul__(self, other: "RationalPoly"):
        if not self.coeffs or not other.coeffs:
            return RationalPoly(())
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return RationalPoly(tuple(out))

    def scale(self, c: Fraction):
        return RationalPoly(tuple(c * a for a in self.coeffs))

    def shift(self, k: int):
        """Multiply by x^k."""
        return RationalPoly((Fraction(0),) * k + self.coeffs)

    def derivative(self):
        return RationalPoly(tuple(k * c for k, c in enumerate(self.coeffs) if k > 0))

    def to_sympy(self):
        return sympy.Poly(
            [QQ(c.numerator, c.denominator) for c in reversed(self.coeffs)] or [QQ(0)],
            X,
            domain=QQ,
        )

    def count_roots(self, lo: Fraction, hi: Fraction) -> int:
        """Real roots in the closed interval [lo, hi], by Sturm's theorem."""
        return int(self.to_sympy().count_roots(sympy.Rational(lo.numerator, lo.denominator),
                                               sympy.Rational(hi.numerator, hi.denominator)))

    def roots_in_open_unit_interval(self) -> int:
        n = self.count_roots(Fraction(0), Fraction(1))
        return n - (self(Fraction(0)) == 0) - (self(Fraction(1)) == 0)

    def as_strings(self):
        return [format_rational(c) for c in self.coeffs]

    @override
    def __str__(self):
        return " + ".join(f"({c})x^{k}" for k, c in enumerate(self.coeffs) if c != 0) or "0"


@dataclass(frozen=True)
class HighPrecPoly:
    # ascending degree; entries are mpf at the precision they were built with
    coeffs: tuple[mpmath.mpf, ...]
    precision: int

    def __post_init__(self):
        for c in self.coeffs:
            if not mpmath.isfinite(c):
                raise PrecisionLoss("polynomial coefficient", float("inf"), self.precision)

    @staticmethod
    def zero(precision: int):
        return HighPrecPoly((), precision)

    @property
    def degree(self):
        k = len(self.coeffs) - 1
        while k >= 0 and self.coeffs[k] == 0:
            k -= 1
        return k

    @property
    def leading(self):
        k = self.degree
        return self.coeffs[k] if k >= 0 else mpmath.mpf(0)

    def terms(self, x: mpmath.mpf):
        return [c * x**k for k, c in enumerate(self.coeffs)]

    def __call__(self, x: mpmath.mpf):
        with mpmath.workprec(self.precision):
            return self.evaluate(x)[0]

    def evaluate(self, x: mpmath.mpf) -> tuple[mpmath.mpf, float]:
        """Value at x and the number of bits lost to cancellation."""
        terms = self.terms(x)
        return sum_with_loss(terms)


def sum_with_loss(terms: Sequence[mpmath.mpf]) -> tuple[mpmath.mpf, float]:
    total = mpmath.fsum(terms)
    magnitude = mpmath.fsum(abs(t) for t in terms)
    if magnitude == 0:
        return total, 0.0
    if total == 0:
        return total, float("inf")
    return total, max(0.0, float(mpmath.log(magnitude / abs(total), 2)))
