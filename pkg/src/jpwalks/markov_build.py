"""Dual multiple stochastic matrices built from a banded Jacobi operator."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction

import mpmath

from jpwalks.banded import BandedOperator, Profile, Scalar, ValueMode, common_mode
from jpwalks.errors import ModeMismatch, NegativeEntry, NonpositiveValue, ZeroDenominator
from jpwalks.jacobi_pineiro import (
    DEFAULT_PRECISION,
    MAX_PRECISION,
    jacobi_band,
    positivity_region,
    q_at,
    stochastic_streams,
    typeII_at_one_sequence,
)
from jpwalks.params import JPParams, to_mpf

logger = logging.getLogger(__name__)


class SigmaKind(StrEnum):
    TYPE_II = "type_ii"  # 1/B^(n)(lambda)
    TYPE_I = "type_i"  # 1/Q^(n)(lambda)
    ALGORITHMIC = "algorithmic"


@dataclass(frozen=True)
class SigmaScaling:
    values: tuple[Scalar, ...]
    kind: SigmaKind

    def __post_init__(self):
        for n, value in enumerate(self.values):
            if value <= 0:
                raise NonpositiveValue(n, value)

    def is_non_increasing(self):
        return all(b <= a for a, b in zip(self.values, self.values[1:]))


def sigma_typeII(bvals: Sequence[Scalar]) -> SigmaScaling:
    return SigmaScaling(tuple(1 / b for b in _checked_positive(bvals)), SigmaKind.TYPE_II)


def sigma_typeI(qvals: Sequence[Scalar]) -> SigmaScaling:
    return SigmaScaling(tuple(1 / q for q in _checked_positive(qvals)), SigmaKind.TYPE_I)


def _checked_positive(values: Sequence[Scalar]) -> Sequence[Scalar]:
    for n, value in enumerate(values):
        if value <= 0:
            raise NonpositiveValue(n, value)
    return values


def _check_nonnegative(J: BandedOperator):
    for n in range(J.size):
        for m, value in J.row(n).items():
            if value < 0:
                raise NegativeEntry(n, m, value)


def _lambda_in_mode(lam: Scalar, mode: ValueMode) -> Scalar:
    if mode == ValueMode.FLOAT:
        return lam if isinstance(lam, mpmath.mpf) else to_mpf(lam)
    if isinstance(lam, mpmath.mpf):
        raise ModeMismatch("A float lambda cannot scale a rational operator.")
    return Fraction(lam)


def stochasticize_typeII(J: BandedOperator, bvals: Sequence[Scalar], lam: Scalar = Fraction(1)) -> BandedOperator:
    """P[n][m] = J[n][m] B^(m)(lam) / (B^(n)(lam) lam)."""
    if len(bvals) < J.size + J.upper_bw:
        raise ValueError(f"Need {J.size + J.upper_bw} values of B^(n)(lambda); got {len(bvals)}.")
    mode = common_mode(J.bands[0][J.lower_bw], list(bvals))
    lam = _lambda_in_mode(lam, mode)
    sigma = sigma_typeII(bvals).values
    _check_nonnegative(J)
    return J.map(lambda n, m, v: v * sigma[n] / (sigma[m] * lam))


def stochasticize_typeI(J: BandedOperator, qvals: Sequence[Scalar], lam: Scalar = Fraction(1)) -> BandedOperator:
    """P[n][m] = J[m][n] Q^(m)(lam) / (Q^(n)(lam) lam), on the rows the band of J fully covers."""
    size = J.size - J.lower_bw
    if len(qvals) < J.size:
        raise ValueError(f"Need {J.size} values of Q^(n)(lambda); got {len(qvals)}.")
    mode = common_mode(J.bands[0][J.lower_bw], list(qvals))
    lam = _lambda_in_mode(lam, mode)
    sigma = sigma_typeI(qvals).values
    _check_nonnegative(J)
    return J.transpose(size).map(lambda n, m, v: v * sigma[n] / (sigma[m] * lam))


def jp_PII_closed(n: int, params: JPParams) -> dict[int, Fraction]:
    """Row n of the type II matrix from the closed-form entry streams."""
    streams = stochastic_streams(n // 2, params)
    return streams.row_even() if n % 2 == 0 else streams.row_odd()


def jp_stochastic_II(L: int, params: JPParams) -> BandedOperator:
    _warn_outside_region(params)
    P = BandedOperator.zeros(L, 2, 1, ValueMode.RATIONAL, Profile.TYPE_II)
    for n in range(L):
        for m, value in jp_PII_closed(n, params).items():
            P[n, m] = value
    return P


def typeI_at_one_sequence(
    L: int, params: JPParams, precision: int = DEFAULT_PRECISION, max_precision: int = MAX_PRECISION
) -> list[mpmath.mpf]:
    """Q^(n)(1) for n < L."""
    return [q_at(n + 1, Fraction(1), params, precision, max_precision).q_value for n in range(L)]


def jp_stochastic_I(
    L: int, params: JPParams, precision: int = DEFAULT_PRECISION, max_precision: int = MAX_PRECISION
) -> BandedOperator:
    _warn_outside_region(params)
    J = jacobi_band(L + 2, params)
    qvals = typeI_at_one_sequence(L + 2, params, precision, max_precision)
    with mpmath.workprec(precision):
        return stochasticize_typeI(J.to_float_mode(), qvals)


def _warn_outside_region(params: JPParams):
    verdict = positivity_region(params)
    if not verdict.ok:
        logger.warning("parameters %s outside the positivity region: %s", params, verdict.reason)


def toeplitz_limits(profile: Profile) -> dict[int, Fraction]:
    """Limiting entries by diagonal offset m - n."""
    limits = {-2: Fraction(1, 27), -1: Fraction(6, 27), 0: Fraction(12, 27), 1: Fraction(8, 27)}
    if profile == Profile.TYPE_I:
        return {-offset: value for offset, value in limits.items()}
    return limits


def toeplitz_split(P: BandedOperator) -> tuple[BandedOperator, BandedOperator]:
    limits = toeplitz_limits(P.profile)

    def limit(n: int, m: int) -> Scalar:
        value = limits.get(m - n, Fraction(0))
        return value if P.mode == ValueMode.RATIONAL else to_mpf(value)

    toeplitz = P.map(lambda n, m, v: limit(n, m))
    remainder = P.map(lambda n, m, v: v - limit(n, m))
    return toeplitz, remainder


def remainder_row_sup(R: BandedOperator, n: int) -> Scalar:
    return max(abs(v) for v in R.row(n).values())


@dataclass(frozen=True)
class SteadyCandidate:
    kappa: tuple[mpmath.mpf, ...]
    # K^(n+1)(1, 1)
    partial_sums: tuple[mpmath.mpf, ...]


def steady_candidate(L: int, params: JPParams, precision: int = DEFAULT_PRECISION) -> SteadyCandidate:
    """kappa_n = B^(n)(1) Q^(n)(1), a left fixed vector of both matrices."""
    bvals = typeII_at_one_sequence(L, params)
    qvals = typeI_at_one_sequence(L, params, precision)
    with mpmath.workprec(precision):
        kappa = [to_mpf(b) * q for b, q in zip(bvals, qvals)]
        partial = list[mpmath.mpf]()
        total = mpmath.mpf(0)
        for value in kappa:
            total += value
            partial.append(total)
    for n, value in enumerate(kappa):
        if value <= 0:
            raise NonpositiveValue(n, value)
    return SteadyCandidate(tuple(kappa), tuple(partial))


def left_eigen_residual(kappa: Sequence[Scalar], P: BandedOperator) -> Scalar:
    """max_j |(kappa P)_j - kappa_j| over columns whose whole contributing band is inside the window."""
    limit = min(P.size, len(kappa))
    worst = None
    for j in range(limit - P.lower_bw):
        rows = range(max(0, j - P.upper_bw), j + P.lower_bw + 1)
        value = abs(sum((kappa[i] * P[i, j] for i in rows), 0 * kappa[0]) - kappa[j])
        worst = value if worst is None or value > worst else worst
    return worst if worst is not None else 0 * kappa[0]


def _as_float(P: BandedOperator) -> BandedOperator:
    return P.to_float_mode()


def duality_check(
    P_II: BandedOperator, P_I: BandedOperator, bvals: Sequence[Scalar], qvals: Sequence[Scalar]
) -> Scalar:
    """max |P_I[n][n-k] - (kappa_{n-k}/kappa_n) P_II[n-k][n]| over the common window."""
    if P_II.mode != P_I.mode:
        P_II, P_I = _as_float(P_II), _as_float(P_I)
        bvals = [to_mpf(b) if isinstance(b, Fraction) else b for b in bvals]
        qvals = [to_mpf(q) if isinstance(q, Fraction) else q for q in qvals]
    kappa = [b * q for b, q in zip(bvals, qvals)]
    size = min(P_I.size, P_II.size, len(kappa))
    worst = 0 * kappa[0]
    for n in range(size):
        for m in range(max(0, n - P_I.lower_bw), min(size, n + P_I.upper_bw + 1)):
            value = abs(P_I[n, m] - kappa[m] / kappa[n] * P_II[m, n])
            worst = value if value > worst else worst
    return worst


def large_n_duality_gap(P_II: BandedOperator, P_I: BandedOperator, n: int) -> dict[int, Scalar]:
    """P_I[n][n-k] - P_II[n-k][n] for k in -2..1."""
    if P_II.mode != P_I.mode:
        P_II, P_I = _as_float(P_II), _as_float(P_I)
    return {k: P_I[n, n - k] - P_II[n - k, n] for k in (-2, -1, 0, 1)}


def scale_to_stochastic(J: BandedOperator, lam: Scalar | None = None) -> tuple[SigmaScaling, BandedOperator]:
    """Diagonal similarity turning J/lam into a stochastic matrix, for any lam >= ||J||_inf.

    Unit row sums of P = diag(sigma) J/lam diag(sigma)^-1 mean u = 1/sigma solves (J/lam) u = u,
    which fixes u_{n+1} from u_0..u_n."""
    if lam is None:
        lam = J.max_row_sum()
    _check_nonnegative(J)
    lam = _lambda_in_mode(lam, J.mode)
    one = Fraction(1) if J.mode == ValueMode.RATIONAL else mpmath.mpf(1)
    u = [one]
    for n in range(J.size):
        rest = u[n] - sum((J[n, m] / lam * u[m] for m in range(max(0, n - J.lower_bw), n + 1)), 0 * one)
        if rest <= 0:
            raise ZeroDenominator(n)
        u.append(rest / (J[n, n + 1] / lam))
    sigma = SigmaScaling(tuple(1 / value for value in u), SigmaKind.ALGORITHMIC)
    P = J.map(lambda n, m, v: u[m] * v / (u[n] * lam))
    logger.debug("scaled a %d-row operator to stochastic form with lambda = %s", J.size, lam)
    return sigma, P
