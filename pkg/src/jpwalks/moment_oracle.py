"""Exact moment matrix of the normalized Jacobi-Piñeiro weights and its Gauss-Borel
factorization. Everything here is rational; it is the reference the closed forms are
checked against."""

import logging
from dataclasses import dataclass
from fractions import Fraction

from jpwalks.banded import BandedOperator, Profile, ValueMode
from jpwalks.errors import InvariantViolation, SingularMinor
from jpwalks.params import JPParams
from jpwalks.polynomials import RationalPoly, rising
from jpwalks.stepline_index import decompose

logger = logging.getLogger(__name__)

type RationalMatrix = list[list[Fraction]]

# number of subdiagonals of the Jacobi operator for two weights
N_LOWER = 2


def normalized_moment(p: int, a: int, params: JPParams) -> Fraction:
    exponent = params.weight_exponent(a)
    return rising(exponent + 1, p) / rising(exponent + params.gamma + 2, p)


def normalized_integral(poly: RationalPoly, a: int, params: JPParams) -> Fraction:
    """Integral of poly against the weight a normalized to unit mass."""
    return sum(
        (c * normalized_moment(p, a, params) for p, c in enumerate(poly.coeffs)),
        Fraction(0),
    )


@dataclass(frozen=True)
class MomentMatrix:
    size: int
    entries: RationalMatrix
    params: JPParams
    scales: tuple[Fraction, Fraction] = (Fraction(1), Fraction(1))


def build_moment_matrix(
    L: int, params: JPParams, scales: tuple[Fraction, Fraction] = (Fraction(1), Fraction(1))
) -> MomentMatrix:
    """g[i][j] = moment i + k(j) of weight a(j), each weight scaled to unit mass
    (times the optional per-weight factor in `scales`)."""
    if L < 1:
        raise ValueError(f"Truncation {L} must be at least 1.")
    columns = [decompose(j) for j in range(L)]
    entries = [
        [
            scales[col.a - 1] * normalized_moment(i + col.k, col.a, params)
            for col in columns
        ]
        for i in range(L)
    ]
    return MomentMatrix(L, entries, params, scales)


def multi_hankel_residual(g: MomentMatrix) -> Fraction:
    """max |(Lambda g - g Upsilon^T)[i][j]| over the window where both sides exist."""
    L = g.size
    return max(
        (
            abs(g.entries[i + 1][j] - g.entries[i][j + 2])
            for i in range(L - 1)
            for j in range(L - 2)
        ),
        default=Fraction(0),
    )


@dataclass(frozen=True)
class GaussBorelFactors:
    S: RationalMatrix
    Stilde: RationalMatrix
    H: list[Fraction]
    moments: MomentMatrix

    @property
    def size(self):
        return len(self.H)

    def residual_is_zero(self):
        """Checks S g Stilde^T = diag(H) exactly."""
        L = self.size
        g = self.moments.entries
        Sg = [[sum((self.S[i][k] * g[k][j] for k in range(i + 1)), Fraction(0)) for j in range(L)] for i in range(L)]
        for i in range(L):
            for j in range(L):
                value = sum((Sg[i][k] * self.Stilde[j][k] for k in range(j + 1)), Fraction(0))
                if value != (self.H[i] if i == j else 0):
                    return False
        return True


def _invert_unit_lower(M: RationalMatrix) -> RationalMatrix:
    L = len(M)
    inv = [[Fraction(int(i == j)) for j in range(L)] for i in range(L)]
    for i in range(L):
        for j in range(i):
            inv[i][j] = -sum((M[i][k] * inv[k][j] for k in range(j, i)), Fraction(0))
    return inv


def gauss_borel(g: MomentMatrix) -> GaussBorelFactors:
    """g = S^{-1} H Stilde^{-T} with unit lower-triangular S, Stilde, by exact elimination."""
    L = g.size
    work = [list(row) for row in g.entries]
    lower = [[Fraction(int(i == j)) for j in range(L)] for i in range(L)]
    upper = [[Fraction(int(i == j)) for j in range(L)] for i in range(L)]
    H = list[Fraction]()
    for l in range(L):
        pivot = work[l][l]
        if pivot == 0:
            raise SingularMinor(l)
        H.append(pivot)
        for i in range(l + 1, L):
            lower[i][l] = work[i][l] / pivot
        for j in range(l + 1, L):
            upper[l][j] = work[l][j] / pivot
        for i in range(l + 1, L):
            factor = lower[i][l]
            if factor == 0:
                continue
            row_l = work[l]
            row_i = work[i]
            for j in range(l + 1, L):
                row_i[j] -= factor * row_l[j]
    S = _invert_unit_lower(lower)
    upper_t = [[upper[j][i] for j in range(L)] for i in range(L)]
    Stilde = _invert_unit_lower(upper_t)
    logger.debug("Gauss-Borel factorization of order %d done", L)
    return GaussBorelFactors(S, Stilde, H, g)


def oracle_typeII(factors: GaussBorelFactors, l: int) -> RationalPoly:
    return RationalPoly(tuple(factors.S[l][: l + 1]))


def oracle_typeI(factors: GaussBorelFactors, l: int) -> tuple[RationalPoly, RationalPoly]:
    """(A_1, A_2) of the l-th linear form against the unit-mass weights."""
    components = [dict[int, Fraction](), dict[int, Fraction]()]
    for j in range(l + 1):
        col = decompose(j)
        components[col.a - 1][col.k] = factors.Stilde[l][j] / factors.H[l]
    A1, A2 = (
        RationalPoly(tuple(c.get(k, Fraction(0)) for k in range(max(c, default=-1) + 1)))
        for c in components
    )
    return A1, A2


def normalized_norm(factors: GaussBorelFactors, l: int) -> Fraction:
    return factors.H[l]


def linear_form_integral(
    poly: RationalPoly, form: tuple[RationalPoly, RationalPoly], params: JPParams
) -> Fraction:
    """Integral of poly times the linear form with components against unit-mass weights."""
    return normalized_integral(poly * form[0], 1, params) + normalized_integral(poly * form[1], 2, params)


def biorthogonality_matrix(factors: GaussBorelFactors, params: JPParams, L: int) -> RationalMatrix:
    typeII = [oracle_typeII(factors, l) for l in range(L)]
    typeI = [oracle_typeI(factors, k) for k in range(L)]
    return [[linear_form_integral(B, Q, params) for Q in typeI] for B in typeII]


def oracle_jacobi(factors: GaussBorelFactors) -> BandedOperator:
    """J with x B^(n) = B^(n+1) + sum_m J[n][m] B^(m), from successive subtraction.

    Rows 0..L-2 are computed; the last N_LOWER of them are marked provisional."""
    L = factors.size
    if L < N_LOWER + 2:
        raise ValueError(f"Truncation {L} is too small for a band with {N_LOWER} subdiagonals.")
    polys = [oracle_typeII(factors, l) for l in range(L)]
    size = L - 1
    J = BandedOperator.zeros(size, N_LOWER, 1, ValueMode.RATIONAL, Profile.TYPE_II, provisional=N_LOWER)
    for n in range(size):
        J[n, n + 1] = Fraction(1)
        rest = polys[n].shift(1) - polys[n + 1]
        for m in range(n, max(-1, n - N_LOWER - 1), -1):
            coefficient = rest.coefficient(m)
            J[n, m] = coefficient
            rest = rest - polys[m].scale(coefficient)
        if rest.coeffs:
            raise InvariantViolation(f"x B^({n}) is not a {N_LOWER + 2}-term combination: remainder {rest}")
    return J
