"""Closed forms for the Jacobi-Piñeiro system: weights x^alpha, x^beta against
(1-x)^gamma dx on [0, 1]."""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import mpmath

from jpwalks.banded import BandedOperator, Profile, ValueMode
from jpwalks.errors import NonTerminating, PrecisionLoss
from jpwalks.params import JPParams, to_mpf
from jpwalks.polynomials import HighPrecPoly, RationalPoly, factor_ratio, rising, sum_with_loss
from jpwalks.stepline_index import local_degree, stepline_multiindex, weight_label

logger = logging.getLogger(__name__)

DEFAULT_PRECISION = 256
MAX_PRECISION = 8192

KAPPA = Fraction(4, 27)


# Type II


def typeII_closed(n: int, m: int, params: JPParams) -> RationalPoly:
    """Monic B_(n,m), expanded from the double sum over (x-1)^(j+k) x^(n+m-j-k)."""
    params.require_perfect()
    alpha, beta, gamma = params.alpha, params.beta, params.gamma
    degree = n + m
    norm = Fraction(factorial(n) * factorial(m)) / (
        rising(degree + alpha + gamma + 1, n) * rising(degree + beta + gamma + 1, m)
    )
    coeffs = [Fraction(0)] * (degree + 1)
    for k in range(n + 1):
        for j in range(m + 1):
            weight = (
                rising(gamma + j + k + 1, m - j)
                * rising(gamma + k + m + 1, n - k)
                * rising(alpha - k + n + 1, k)
                * rising(beta - j - k + m + n + 1, j)
                / (factorial(j) * factorial(k) * factorial(m - j) * factorial(n - k))
            )
            s = j + k
            for t in range(s + 1):
                coeffs[degree - s + t] += norm * weight * comb(s, t) * (-1) ** (s - t)
    return RationalPoly(tuple(coeffs))


def stepline_typeII(l: int, params: JPParams) -> RationalPoly:
    return typeII_closed(*stepline_multiindex(l), params)


def typeII_at_one(n: int, m: int, params: JPParams) -> Fraction:
    alpha, beta, gamma = params.alpha, params.beta, params.gamma
    return rising(gamma + 1, m + n) / (
        rising(alpha + gamma + m + n + 1, n) * rising(beta + gamma + m + n + 1, m)
    )


def typeII_at_zero(n: int, m: int, params: JPParams) -> Fraction:
    alpha, beta, gamma = params.alpha, params.beta, params.gamma
    return (-1) ** (m + n) * rising(alpha + 1, n) * rising(beta + 1, m) / (
        rising(alpha + gamma + m + n + 1, n) * rising(beta + gamma + m + n + 1, m)
    )


def typeII_at_one_sequence(L: int, params: JPParams) -> list[Fraction]:
    """B^(l)(1) for l < L, as running products of the superdiagonal stochastic entries."""
    values = [Fraction(1)]
    n = 0
    while len(values) < L:
        streams = stochastic_streams(n, params)
        values.append(values[-1] * streams.super_even)
        values.append(values[-1] * streams.super_odd)
        n += 1
    return values[:L]


# Type I


@dataclass(frozen=True)
class _TermSeries:
    """Coefficient of x^(top - j) is first * ratios[0] * ... * ratios[j-1]."""

    top: int
    first: Fraction
    ratios: tuple[Fraction, ...]


def _series_square(n: int, params: JPParams) -> _TermSeries:
    # first component of the (n, n) form, times the mass of x^alpha (1-x)^gamma
    a, b, g = params.alpha, params.beta, params.gamma
    first = (
        rising(2 * n + a + g, n)
        * rising(2 * n + b + g, n)
        / (factorial(n - 1) * rising(g + 1, 2 * n - 1))
        * rising(a + g + 2, 3 * n - 3)
        / (rising(a + 1, n - 1) * rising(a - b, n))
    )
    ratios = tuple(
        -(n - 1 - j) * (a + n - 1 - j) * (a - b + n - 1 - j)
        / ((j + 1) * (a + g + 3 * n - 2 - j) * (a - b - 1 - j))
        for j in range(n - 1)
    )
    return _TermSeries(n - 1, first, ratios)


def _series_step_first(n: int, params: JPParams) -> _TermSeries:
    # first component of the (n+1, n) form
    a, b, g = params.alpha, params.beta, params.gamma
    first = (
        rising(2 * n + 1 + b + g, n)
        / factorial(n)
        * rising(2 * n + 1 + a + g, n)
        * rising(a + g + 2, 3 * n)
        / (rising(g + 1, 2 * n) * rising(a + 1, n) * rising(a - b + 1, n))
    )
    ratios = tuple(
        -(n - j) * (a + n - j) * (a - b + n - j)
        / ((j + 1) * (3 * n - j + a + g) * (a - b - j))
        for j in range(n)
    )
    return _TermSeries(n, first, ratios)


def _series_step_second(n: int, params: JPParams) -> _TermSeries | None:
    # second component of the (n+1, n) form; absent for (1, 0)
    if n == 0:
        return None
    a, b, g = params.alpha, params.beta, params.gamma
    first = (
        (-1) ** (n - 1)
        * rising(2 * n + 1 + a + g, n + 1)
        / factorial(n - 1)
        * rising(2 * n + 1 + b + g, n - 1)
        * rising(b + g + 2, 3 * n - 1)
        / (rising(g + 1, 2 * n) * rising(b + 1, n - 1) * rising(a - b - n + 1, n + 1))
    )
    ratios = tuple(
        -(n - 1 - j) * (b + n - 1 - j) * (a - b - n + 1 + j)
        / ((j + 1) * (b + g + 3 * n - 1 - j) * (a - b + 2 + j))
        for j in range(n - 1)
    )
    return _TermSeries(n - 1, first, ratios)


@lru_cache(maxsize=2048)
def _typeI_series(l: int, params: JPParams) -> tuple[_TermSeries | None, _TermSeries | None]:
    if l < 1:
        raise ValueError(f"Linear forms are indexed from 1; got {l}.")
    params.require_perfect()
    n1, n2 = stepline_multiindex(l)
    if n1 == n2:
        swapped = JPParams(params.beta, params.alpha, params.gamma)
        return _series_square(n1, params), _series_square(n1, swapped)
    return _series_step_first(n2, params), _series_step_second(n2, params)


def _exact_poly(series: _TermSeries | None) -> RationalPoly:
    if series is None:
        return RationalPoly(())
    coeffs = [Fraction(0)] * (series.top + 1)
    term = series.first
    coeffs[series.top] = term
    for j, ratio in enumerate(series.ratios):
        term *= ratio
        coeffs[series.top - j - 1] = term
    return RationalPoly(tuple(coeffs))


def _mp_poly(series: _TermSeries | None, mass: mpmath.mpf, precision: int) -> HighPrecPoly:
    if series is None:
        return HighPrecPoly.zero(precision)
    coeffs = [mpmath.mpf(0)] * (series.top + 1)
    term = to_mpf(series.first) / mass
    coeffs[series.top] = term
    for j, ratio in enumerate(series.ratios):
        term *= to_mpf(ratio)
        coeffs[series.top - j - 1] = term
    return HighPrecPoly(tuple(coeffs), precision)


def typeI_normalized(l: int, params: JPParams) -> tuple[RationalPoly, RationalPoly]:
    """Exact components of the form with multi-index nu(l) against unit-mass weights;
    the true components are these divided by the weight masses."""
    first, second = _typeI_series(l, params)
    return _exact_poly(first), _exact_poly(second)


def typeI_closed(
    l: int, params: JPParams, precision: int = DEFAULT_PRECISION
) -> tuple[HighPrecPoly, HighPrecPoly]:
    first, second = _typeI_series(l, params)
    with mpmath.workprec(precision):
        return (
            _mp_poly(first, params.beta_constant(1, precision), precision),
            _mp_poly(second, params.beta_constant(2, precision), precision),
        )


@dataclass(frozen=True)
class LinearFormEval:
    point: mpmath.mpf
    q_value: mpmath.mpf
    # (A_1(x) x^alpha, A_2(x) x^beta)
    components: tuple[mpmath.mpf, mpmath.mpf]
    precision: int


@lru_cache(maxsize=8192)
def q_at(
    l: int,
    x: Fraction | int | mpmath.mpf,
    params: JPParams,
    precision: int = DEFAULT_PRECISION,
    max_precision: int = MAX_PRECISION,
) -> LinearFormEval:
    """Q_nu(l)(x), doubling the working precision while cancellation eats more than half of it."""
    prec = precision
    while True:
        with mpmath.workprec(prec):
            point = to_mpf(x) if isinstance(x, Fraction | int) else mpmath.mpf(x)
            if point <= 0:
                raise ValueError(f"Linear forms are evaluated at positive points; got {x}.")
            A1, A2 = typeI_closed(l, params, prec)
            w1 = mpmath.power(point, to_mpf(params.alpha))
            w2 = mpmath.power(point, to_mpf(params.beta))
            terms1 = [t * w1 for t in A1.terms(point)]
            terms2 = [t * w2 for t in A2.terms(point)]
            value, lost = sum_with_loss(terms1 + terms2)
            if lost <= prec / 2:
                components = (mpmath.fsum(terms1), mpmath.fsum(terms2))
                with mpmath.workprec(precision):
                    return LinearFormEval(
                        +point, +value, (+components[0], +components[1]), precision
                    )
        if prec * 2 > max_precision:
            raise PrecisionLoss(f"Q^({l})({x})", lost, prec)
        logger.info("Q^(%d)(%s) lost %.0f of %d bits; retrying at %d", l, x, lost, prec, 2 * prec)
        prec *= 2


def eval_3F2_terminating(
    upper: tuple[Fraction, Fraction, Fraction],
    lower: tuple[Fraction, Fraction],
    z: Fraction | mpmath.mpf,
    precision: int = DEFAULT_PRECISION,
) -> mpmath.mpf:
    stops = [-u for u in upper if u <= 0 and Fraction(u).denominator == 1]
    if not stops:
        raise NonTerminating(f"No upper parameter of {upper} is a nonpositive integer.")
    N = int(min(stops))
    with mpmath.workprec(precision):
        zz = to_mpf(z) if isinstance(z, Fraction | int) else mpmath.mpf(z)
        term = mpmath.mpf(1)
        total = mpmath.mpf(1)
        for j in range(N):
            denominator = (lower[0] + j) * (lower[1] + j) * (j + 1)
            if denominator == 0:
                raise ValueError(f"Lower parameters {lower} hit a pole at term {j + 1}.")
            term *= to_mpf((upper[0] + j) * (upper[1] + j) * (upper[2] + j) / denominator) * zz
            total += term
        return total


def typeI_3F2(n: int, x: Fraction | mpmath.mpf, params: JPParams, precision: int = DEFAULT_PRECISION):
    """First component of the (n, n) form through its 3F2 representation."""
    a, b, g = params.alpha, params.beta, params.gamma
    with mpmath.workprec(precision):
        point = to_mpf(x) if isinstance(x, Fraction | int) else mpmath.mpf(x)
        prefactor = (
            mpmath.gamma(to_mpf(a + g + 3 * n - 1))
            / (mpmath.gamma(to_mpf(a + n)) * mpmath.gamma(to_mpf(g + 2 * n)))
            * to_mpf(rising(a + g + 2 * n, n) * rising(b + g + 2 * n, n) / rising(a - b, n))
            * point ** (n - 1)
            / factorial(n - 1)
        )
        series = eval_3F2_terminating(
            (Fraction(1 - n), -a - n + 1, -a + b - n + 1),
            (-a + b + 1, -a - g - 3 * n + 2),
            1 / point,
            precision,
        )
        return prefactor * series


# Norms


def norm_H_normalized(l: int, params: JPParams) -> Fraction:
    """H_l divided by the mass of weight a(l)."""
    a, b, g = params.alpha, params.beta, params.gamma
    n = local_degree(l)
    if weight_label(l) == 1:
        return (
            factorial(n) * rising(g + 1, 2 * n) * rising(a + 1, n) / rising(a + g + 2, 3 * n)
            * rising(a - b + 1, n)
            / (rising(2 * n + 1 + a + g, n) * rising(2 * n + 1 + b + g, n))
        )
    return (
        factorial(n) * rising(g + 1, 2 * n + 1) * rising(b + 1, n) / rising(b + g + 2, 3 * n)
        * rising(b - a, n + 1)
        / (rising(2 * n + 2 + b + g, n + 1) * rising(2 * n + 2 + a + g, n + 1))
    )


def norm_H(l: int, params: JPParams, precision: int = DEFAULT_PRECISION) -> mpmath.mpf:
    with mpmath.workprec(precision):
        return to_mpf(norm_H_normalized(l, params)) * params.beta_constant(weight_label(l), precision)


# Recurrence coefficients and stochastic entries


@dataclass(frozen=True)
class RecurrenceBand:
    n: int
    b_even: Fraction  # b_{n,n}   = J[2n][2n]
    b_odd: Fraction  # b_{n+1,n} = J[2n+1][2n+1]
    c_even: Fraction  # c_{n+1,n+1} = J[2n+2][2n+1]
    c_odd: Fraction  # c_{n+1,n} = J[2n+1][2n]
    d_even: Fraction  # d_{n+1,n+1} = J[2n+2][2n]
    d_odd: Fraction  # d_{n+2,n+1} = J[2n+3][2n+1]


def _shifted(params: JPParams):
    # the coefficient list is written at (alpha-1, beta-1, gamma-1)
    return params.alpha + 1, params.beta + 1, params.gamma + 1


def _b_even(n: int, params: JPParams) -> Fraction:
    a, b, g = _shifted(params)
    if n == 0:
        return a / (a + g)
    numerator = (
        (a + n) * (b + g + 2 * n - 1) * (a + g + 2 * n - 1) / ((a + g + 3 * n) * (b + g + 3 * n - 1))
        + n * (g + 2 * n - 1) * (a + g + 2 * n - 1) / ((b + g + 3 * n - 2) * (b + g + 3 * n - 1))
        + n * (g + 2 * n - 1) * (b + g + 2 * n - 2) / ((a + g + 3 * n - 2) * (b + g + 3 * n - 2))
    )
    return numerator / (a + g + 3 * n - 1)


def _b_odd(n: int, params: JPParams) -> Fraction:
    a, b, g = _shifted(params)
    if n == 0:
        return (a * a * b + 2 * a * b * g + g * (b + 1) * (g + 1)) / ((a + g) * (a + g + 1) * (b + g + 1))
    q = b * b + (g + 3 * n - 1) * b + 2 * n * (g + 2 * n)
    numerator = (
        q * a * a
        + (2 * g + 5 * n) * q * a
        + (g + 2 * n)
        * (
            18 * n**3
            + (14 * b + 15 * g + 5) * n**2
            + (2 * b + g + 2) * (2 * b + 3 * g - 1) * n
            + (b + 1) * (g + 1) * (b + g - 1)
        )
    )
    return numerator / ((a + g + 3 * n) * (a + g + 3 * n + 1) * (b + g + 3 * n - 1) * (b + g + 3 * n + 1))


def _c_odd(n: int, params: JPParams) -> Fraction:
    a, b, g = _shifted(params)
    if n == 0:
        return a * g / ((a + g) ** 2 * (a + g + 1))
    inner = (
        a**3 * n * (b + n - 1)
        + a**2 * n * (b + n - 1) * (3 * g + 8 * n - 1)
        + a
        * (
            b**3 * (n + 1)
            + g**3 * (n + 1)
            + b**2 * (n + 1) * (3 * g + 8 * n - 3)
            + 3 * g**2 * (4 * n**2 + n - 1)
            + g * (2 + n * (42 * n**2 - 9 * n - 13))
            + b * (2 + g**2 * (6 * n + 3) + g * (33 * n**2 + 9 * n - 6) + n * (44 * n**2 + n - 15))
            + n * (6 + n * (-13 + n * (45 * n - 26)))
        )
        + n
        * (
            b**3 * (n + 1)
            + b**2 * (n + 1) * (3 * g + 8 * n - 3)
            + (g + 3 * n - 1) * (g + 3 * n) * (6 * n**2 + 3 * g * n + g - 2)
            + b * (2 + g**3 + 3 * g**2 * (4 * n + 1) + g * (42 * n**2 + 9 * n - 7) + n * (-17 + n * (45 * n + 2)))
        )
    )
    numerator = (g + 2 * n) * (a + g + 2 * n - 1) * (b + g + 2 * n - 1) * inner
    denominator = (
        (a + g + 3 * n - 1) * (a + g + 3 * n) ** 2 * (a + g + 3 * n + 1)
        * (b + g + 3 * n - 2) * (b + g + 3 * n - 1) ** 2 * (b + g + 3 * n)
    )
    return numerator / denominator


def _d_even(n: int, params: JPParams) -> Fraction:
    a, b, g = _shifted(params)
    return factor_ratio(
        [n + 1, a + n, a - b + n + 1, g + 2 * n, g + 2 * n + 1,
         a + g + 2 * n - 1, a + g + 2 * n, b + g + 2 * n - 1, b + g + 2 * n],
        [a + g + 3 * n - 1, a + g + 3 * n, a + g + 3 * n, a + g + 3 * n + 1, a + g + 3 * n + 1,
         a + g + 3 * n + 2, b + g + 3 * n - 1, b + g + 3 * n, b + g + 3 * n + 1],
    )


@dataclass(frozen=True)
class StochasticStreams:
    """Entries of rows 2n and 2n+1 of the type II stochastic matrix at lambda = 1."""

    n: int
    super_even: Fraction  # P[2n][2n+1]
    super_odd: Fraction  # P[2n+1][2n+2]
    diag_even: Fraction  # P[2n][2n]
    diag_odd: Fraction  # P[2n+1][2n+1]
    sub_even: Fraction  # P[2n][2n-1]
    sub_odd: Fraction  # P[2n+1][2n]
    sub2_even: Fraction  # P[2n][2n-2]
    sub2_odd: Fraction  # P[2n+1][2n-1]

    def row_even(self) -> dict[int, Fraction]:
        n = self.n
        row = {2 * n: self.diag_even, 2 * n + 1: self.super_even}
        if n > 0:
            row[2 * n - 1] = self.sub_even
            row[2 * n - 2] = self.sub2_even
        return row

    def row_odd(self) -> dict[int, Fraction]:
        n = self.n
        row = {2 * n: self.sub_odd, 2 * n + 1: self.diag_odd, 2 * n + 2: self.super_odd}
        if n > 0:
            row[2 * n - 1] = self.sub2_odd
        return row


@lru_cache(maxsize=4096)
def stochastic_streams(n: int, params: JPParams) -> StochasticStreams:
    params.require_perfect()
    a, b, g = params.alpha, params.beta, params.gamma
    super_even = factor_ratio(
        [g + 2 * n + 1, a + g + 2 * n + 1, b + g + 2 * n + 1],
        [a + g + 3 * n + 1, a + g + 3 * n + 2, b + g + 3 * n + 1],
    )
    super_odd = factor_ratio(
        [g + 2 * n + 2, a + g + 2 * n + 2, b + g + 2 * n + 2],
        [a + g + 3 * n + 3, b + g + 3 * n + 2, b + g + 3 * n + 3],
    )
    if n == 0:
        sub_even = sub2_even = sub2_odd = Fraction(0)
        sub_odd = (a + 1) / ((a + g + 2) * (a + g + 3))
    else:
        sub_even = (
            factor_ratio([n, a - b + n, g + 2 * n - 1], [a + g + 3 * n - 1, a + g + 3 * n, a + g + 3 * n + 1])
            + factor_ratio([n, b + n, b + g + 2 * n], [a + g + 3 * n, a + g + 3 * n + 1, b + g + 3 * n])
            + factor_ratio([n, b + n, a + g + 2 * n + 1], [a + g + 3 * n + 1, b + g + 3 * n, b + g + 3 * n + 1])
        )
        sub_odd = factor_ratio(
            [n, a - b - n, b + n, a + g + 3 * n + 1],
            [a - b + 1, b + g + 3 * n, b + g + 3 * n + 1, b + g + 3 * n + 2],
        ) + factor_ratio([n + 1, a - b + n + 1, a + n + 1], [a - b + 1, a + g + 3 * n + 2, a + g + 3 * n + 3])
        sub2_even = factor_ratio([n, a - b + n, a + n], [a + g + 3 * n - 1, a + g + 3 * n, a + g + 3 * n + 1])
        sub2_odd = factor_ratio([n, b - a + n, b + n], [b + g + 3 * n, b + g + 3 * n + 1, b + g + 3 * n + 2])
    return StochasticStreams(
        n=n,
        super_even=super_even,
        super_odd=super_odd,
        diag_even=_b_even(n, params),
        diag_odd=_b_odd(n, params),
        sub_even=sub_even,
        sub_odd=sub_odd,
        sub2_even=sub2_even,
        sub2_odd=sub2_odd,
    )


def recurrence_coeffs(n: int, params: JPParams) -> RecurrenceBand:
    params.require_perfect()
    here = stochastic_streams(n, params)
    after = stochastic_streams(n + 1, params)
    return RecurrenceBand(
        n=n,
        b_even=_b_even(n, params),
        b_odd=_b_odd(n, params),
        c_even=after.sub_even * here.super_odd,
        c_odd=_c_odd(n, params),
        d_even=_d_even(n, params),
        d_odd=after.sub2_odd * here.super_odd * after.super_even,
    )


def jacobi_band(L: int, params: JPParams) -> BandedOperator:
    """Rows 0..L-1 of the Jacobi operator, unit superdiagonal."""
    J = BandedOperator.zeros(L, 2, 1, ValueMode.RATIONAL, Profile.TYPE_II)
    for n in range((L + 1) // 2):
        band = recurrence_coeffs(n, params)
        even, odd = 2 * n, 2 * n + 1
        entries = {
            (even, even + 1): Fraction(1),
            (even, even): band.b_even,
            (odd, odd + 1): Fraction(1),
            (odd, odd): band.b_odd,
            (odd, even): band.c_odd,
            (even + 2, odd): band.c_even,
            (even + 2, even): band.d_even,
            (odd + 2, odd): band.d_odd,
        }
        for (r, c), value in entries.items():
            if r < L:
                J[r, c] = value
    return J


@dataclass(frozen=True)
class PositivityVerdict:
    ok: bool
    reason: str


def positivity_region(params: JPParams) -> PositivityVerdict:
    if not params.is_perfect:
        return PositivityVerdict(False, "resonant parameters: alpha - beta is an integer")
    if abs(params.alpha - params.beta) >= 1:
        return PositivityVerdict(False, "|alpha - beta| >= 1")
    return PositivityVerdict(True, "alpha, beta, gamma > -1, |alpha - beta| < 1 and alpha != beta")


def asymptotic_coeffs() -> tuple[Fraction, Fraction, Fraction]:
    """Limits of the b, c and d streams."""
    return 3 * KAPPA, 3 * KAPPA**2, KAPPA**3
