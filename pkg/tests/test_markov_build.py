from fractions import Fraction

import mpmath
import pytest
from conftest import PARAMETER_GRID

from jpwalks.banded import BandedOperator, Profile, ValueMode
from jpwalks.errors import NegativeEntry, NonpositiveValue
from jpwalks.jacobi_pineiro import jacobi_band, stochastic_streams, typeII_at_one_sequence
from jpwalks.markov_build import (
    SigmaKind,
    duality_check,
    jp_stochastic_I,
    jp_stochastic_II,
    large_n_duality_gap,
    left_eigen_residual,
    remainder_row_sup,
    scale_to_stochastic,
    sigma_typeI,
    sigma_typeII,
    steady_candidate,
    stochasticize_typeII,
    toeplitz_limits,
    toeplitz_split,
    typeI_at_one_sequence,
)
from jpwalks.params import JPParams

F = Fraction

RECURRENT_BLOCK = [
    [F(3, 5), F(2, 5)],
    [F(4, 15), F(19, 60), F(5, 12)],
    [F(4, 39), F(25, 156), F(95, 204), F(60, 221)],
    [F(0), F(1, 64), F(263, 1088), F(71, 170), F(13, 40)],
    [F(0), F(0), F(24, 425), F(173, 850), F(133, 290), F(204, 725)],
    [F(0), F(0), F(0), F(1, 40), F(271, 1160), F(199, 464), F(5, 16)],
]

TRANSIENT_BLOCK = [
    [F(1, 3), F(2, 3)],
    [F(4, 39), F(25, 78), F(15, 26)],
    [F(20, 663), F(617, 5304), F(49, 104), F(13, 34)],
]

# rows 0..5 of the type I matrices, columns n-1..n+2
RECURRENT_TYPE_I = [
    [0.6000, 0.2531, 0.1469],
    [0.4215, 0.3167, 0.2419, 0.0199],
    [0.2760, 0.4657, 0.2036, 0.0547],
    [0.3223, 0.4176, 0.2341, 0.0260],
    [0.2826, 0.4586, 0.2110, 0.0478],
    # the published (5, 6) entry repeats its neighbour; it is checked through the row sum
    [0.3115, 0.4289, None, 0.0291],
]

TRANSIENT_TYPE_I = [
    [0.3333, 0.3198, 0.3469],
    [0.2138, 0.3205, 0.4289, 0.0368],
    [0.1565, 0.4711, 0.2726, 0.0998],
    [0.2395, 0.4150, 0.3061, 0.0394],
    [0.2160, 0.4600, 0.2542, 0.0697],
    [0.2583, 0.4279, 0.2746, 0.0391],
]


def assert_block(P: BandedOperator, block: list[list[Fraction]]):
    for n, row in enumerate(block):
        for m, value in enumerate(row):
            assert P[n, m] == value, f"entry ({n}, {m})"


def test_recurrent_type_II_matrix(recurrent: JPParams):
    assert_block(jp_stochastic_II(8, recurrent), RECURRENT_BLOCK)


def test_transient_type_II_matrix(transient: JPParams):
    assert_block(jp_stochastic_II(8, transient), TRANSIENT_BLOCK)


@pytest.mark.parametrize("params", PARAMETER_GRID, ids=str)
def test_type_II_rows_sum_to_one(params: JPParams):
    P = jp_stochastic_II(40, params)
    assert P.mode == ValueMode.RATIONAL
    assert P.row_sum_residual() == 0
    assert P.is_nonnegative()


def test_closed_form_matches_generic_stochasticization(transient: JPParams):
    L = 20
    P = jp_stochastic_II(L, transient)
    generic = stochasticize_typeII(jacobi_band(L + 1, transient), typeII_at_one_sequence(L + 2, transient))
    for n in range(L):
        assert P.row(n) == generic.row(n)


@pytest.mark.parametrize(
    "name, table", [("recurrent", RECURRENT_TYPE_I), ("transient", TRANSIENT_TYPE_I)]
)
def test_type_I_matrix_decimals(name: str, table: list[list[float | None]], request: pytest.FixtureRequest):
    params: JPParams = request.getfixturevalue(name)
    P = jp_stochastic_I(8, params)
    assert P.profile == Profile.TYPE_I
    for n, row in enumerate(table):
        for offset, value in enumerate(row):
            if value is not None:
                assert float(P[n, max(0, n - 1) + offset]) == pytest.approx(value, abs=1.01e-4)
        assert abs(P.row_sum(n) - 1) < mpmath.mpf(10) ** -30


def test_type_I_rows_sum_to_one(recurrent: JPParams):
    P = jp_stochastic_I(24, recurrent)
    assert P.row_sum_residual() < mpmath.mpf(2) ** -128
    assert P.is_nonnegative()


def test_duality_between_the_chains(recurrent: JPParams):
    L = 16
    P_II = jp_stochastic_II(L, recurrent)
    P_I = jp_stochastic_I(L, recurrent)
    bvals = typeII_at_one_sequence(L + 2, recurrent)
    qvals = typeI_at_one_sequence(L + 2, recurrent)
    with mpmath.workprec(256):
        assert duality_check(P_II, P_I, bvals, qvals) < mpmath.mpf(10) ** -50
        gap = large_n_duality_gap(P_II, P_I, 8)
        # the diagonals coincide
        assert abs(gap[0]) < mpmath.mpf(10) ** -50


@pytest.mark.slow
def test_duality_gap_closes(recurrent: JPParams):
    P_II = jp_stochastic_II(124, recurrent)
    P_I = jp_stochastic_I(124, recurrent)
    gaps = [max(abs(v) for v in large_n_duality_gap(P_II, P_I, n).values()) for n in (20, 60, 120)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 2e-2


def test_large_n_entry_limits(recurrent: JPParams):
    limits = toeplitz_limits(Profile.TYPE_II)
    for n in (100, 200, 500):
        streams = stochastic_streams(n, recurrent)
        even, odd = streams.row_even(), streams.row_odd()
        for row, center in ((even, 2 * n), (odd, 2 * n + 1)):
            for m, value in row.items():
                assert abs(value - limits[m - center]) < 5e-2
    streams = stochastic_streams(500, recurrent)
    for row, center in ((streams.row_even(), 1000), (streams.row_odd(), 1001)):
        for m, value in row.items():
            assert abs(value - limits[m - center]) < 5e-3


@pytest.mark.parametrize("name", ["recurrent", "transient"])
def test_entry_streams_approach_limits_monotonically(name: str, request: pytest.FixtureRequest):
    params: JPParams = request.getfixturevalue(name)
    limits = toeplitz_limits(Profile.TYPE_II)
    rows = [(stochastic_streams(n, params), n) for n in (100, 200, 500)]
    for parity in ("row_even", "row_odd"):
        distances = dict[int, list[Fraction]]()
        for streams, n in rows:
            center = 2 * n if parity == "row_even" else 2 * n + 1
            for m, value in getattr(streams, parity)().items():
                distances.setdefault(m - center, []).append(abs(value - limits[m - center]))
        for offset, values in distances.items():
            assert values[0] >= values[1] >= values[2], (parity, offset)
            assert values[2] < values[0] or values[0] == 0, (parity, offset)


def test_toeplitz_remainder_decays(transient: JPParams):
    T, R = toeplitz_split(jp_stochastic_II(402, transient))
    assert T[300, 301] == F(8, 27)
    assert remainder_row_sup(R, 400) < remainder_row_sup(R, 100) < remainder_row_sup(R, 10)
    assert toeplitz_limits(Profile.TYPE_I)[-1] == F(8, 27)


def test_steady_candidate(recurrent: JPParams):
    L = 40
    candidate = steady_candidate(L, recurrent)
    assert all(k > 0 for k in candidate.kappa)
    assert all(b >= a for a, b in zip(candidate.partial_sums, candidate.partial_sums[1:]))
    with mpmath.workprec(256):
        P = jp_stochastic_II(L, recurrent).to_float_mode()
        assert left_eigen_residual(candidate.kappa, P) < mpmath.mpf(10) ** -20


@pytest.mark.slow
def test_steady_candidate_at_200(recurrent: JPParams):
    L = 200
    candidate = steady_candidate(L, recurrent)
    assert all(k > 0 for k in candidate.kappa)
    with mpmath.workprec(256):
        P = jp_stochastic_II(L, recurrent).to_float_mode()
        assert left_eigen_residual(candidate.kappa, P) < mpmath.mpf(10) ** -20


def test_scaling_algorithm_on_jacobi_operator(recurrent: JPParams):
    J = jacobi_band(100, recurrent)
    sigma, P = scale_to_stochastic(J)
    assert P.row_sum_residual() == 0
    assert P.is_nonnegative()
    assert sigma.is_non_increasing()


def test_scaling_algorithm_keeps_a_stochastic_operator():
    J = BandedOperator.zeros(10, 2, 1, ValueMode.RATIONAL, Profile.TYPE_II)
    for n in range(10):
        J[n, n] = F(1, 2)
        J[n, n + 1] = F(1, 2)
    sigma, P = scale_to_stochastic(J, F(1))
    assert set(sigma.values) == {F(1)}
    assert P.row(3) == J.row(3)


def test_type_II_scaling_values(recurrent: JPParams):
    bvals = typeII_at_one_sequence(10, recurrent)
    sigma = sigma_typeII(bvals)
    assert sigma.values[0] == 1
    assert sigma.values[1] == F(5, 2)


def test_type_I_scaling_values(recurrent: JPParams):
    qvals = typeI_at_one_sequence(6, recurrent)
    sigma = sigma_typeI(qvals)
    assert sigma.kind == SigmaKind.TYPE_I
    assert all(abs(s * q - 1) < 1e-12 for s, q in zip(sigma.values, qvals))
    with pytest.raises(NonpositiveValue):
        _ = sigma_typeI([*qvals[:2], -qvals[2]])


def test_stochasticization_errors(recurrent: JPParams):
    J = jacobi_band(6, recurrent)
    bvals = typeII_at_one_sequence(7, recurrent)
    with pytest.raises(NonpositiveValue):
        _ = stochasticize_typeII(J, [F(0), *bvals[1:]])
    negative = J.map(lambda n, m, v: -v if (n, m) == (2, 1) else v)
    with pytest.raises(NegativeEntry):
        _ = stochasticize_typeII(negative, bvals)
    with pytest.raises(ValueError):
        _ = stochasticize_typeII(J, bvals[:5])
