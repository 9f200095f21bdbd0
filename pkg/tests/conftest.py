from fractions import Fraction

import pytest

from jpwalks.params import RECURRENT_EXAMPLE, TRANSIENT_EXAMPLE, JPParams


@pytest.fixture
def recurrent() -> JPParams:
    return RECURRENT_EXAMPLE


@pytest.fixture
def transient() -> JPParams:
    return TRANSIENT_EXAMPLE


# perfect triples inside |alpha - beta| < 1
PARAMETER_GRID = [
    RECURRENT_EXAMPLE,
    TRANSIENT_EXAMPLE,
    JPParams(Fraction(0), Fraction(1, 2), Fraction(0)),
    JPParams(Fraction(1, 3), Fraction(-1, 3), Fraction(1, 4)),
    JPParams(Fraction(-1, 2), Fraction(1, 3), Fraction(-2, 3)),
    JPParams(Fraction(2), Fraction(5, 2), Fraction(1)),
    JPParams(Fraction(3, 4), Fraction(1, 5), Fraction(-1, 5)),
    JPParams(Fraction(-4, 5), Fraction(-1, 10), Fraction(3, 2)),
    JPParams(Fraction(1, 7), Fraction(2, 3), Fraction(-9, 10)),
]
