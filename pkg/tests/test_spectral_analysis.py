from fractions import Fraction

import mpmath
import numpy as np
import pytest

from jpwalks.banded import Profile, dense_power
from jpwalks.errors import InexactDivision
from jpwalks.markov_build import jp_stochastic_I, jp_stochastic_II
from jpwalks.params import JPParams
from jpwalks.spectral_analysis import (
    Recurrence,
    RatioKind,
    cd_checks,
    cd_kernel,
    char_poly,
    classify,
    double_root,
    first_passage_curve,
    first_passage_fn,
    generating_fn,
    kappa_ratio,
    km_transition,
    km_transition_exact,
    km_transition_typeI,
    ratio_asymptotics,
    truncated_recurrence_integrals,
)

TINY = mpmath.mpf(10) ** -20


def exact_power(rows: list[list[Fraction]], r: int) -> list[list[Fraction]]:
    size = len(rows)
    result = [[Fraction(int(i == j)) for j in range(size)] for i in range(size)]
    for _ in range(r):
        result = [
            [sum((result[i][k] * rows[k][j] for k in range(size)), Fraction(0)) for j in range(size)]
            for i in range(size)
        ]
    return result


@pytest.mark.parametrize("name", ["recurrent", "transient"])
def test_zero_steps_is_biorthogonality(name: str, request: pytest.FixtureRequest):
    params: JPParams = request.getfixturevalue(name)
    for n in range(13):
        for m in range(13):
            value = km_transition(n, m, 0, params)
            assert abs(value - (1 if n == m else 0)) < TINY


def test_one_step_matches_matrices(recurrent: JPParams):
    assert abs(km_transition(0, 0, 1, recurrent) - mpmath.mpf(3) / 5) < TINY
    assert abs(km_transition(2, 3, 1, recurrent) - mpmath.mpf(60) / 221) < TINY
    assert abs(km_transition_typeI(0, 0, 1, recurrent) - mpmath.mpf(3) / 5) < TINY


def test_exact_representation_matches_matrix_power(transient: JPParams):
    P = jp_stochastic_II(20, transient).to_exact_rows()
    powers = {r: exact_power(P, r) for r in range(1, 5)}
    for r, power in powers.items():
        for n in range(9):
            for m in range(9):
                assert km_transition_exact(n, m, r, transient) == power[n][m]


def test_chapman_kolmogorov(recurrent: JPParams):
    n, m = 3, 2
    composed = sum(
        (km_transition_exact(n, k, 2, recurrent) * km_transition_exact(k, m, 3, recurrent) for k in range(n + 3)),
        Fraction(0),
    )
    assert composed == km_transition_exact(n, m, 5, recurrent)


@pytest.mark.parametrize("chain", [Profile.TYPE_II, Profile.TYPE_I])
def test_integral_matches_truncated_power(chain: Profile, recurrent: JPParams):
    if chain == Profile.TYPE_II:
        P = jp_stochastic_II(60, recurrent).to_dense()
        transition = km_transition
    else:
        P = jp_stochastic_I(60, recurrent).to_dense()
        transition = km_transition_typeI
    power = dense_power(P, 4)
    for n in range(0, 9, 2):
        for m in range(0, 9, 2):
            assert abs(float(transition(n, m, 4, recurrent)) - power[n, m]) < 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("chain", [Profile.TYPE_II, Profile.TYPE_I])
def test_integral_matches_truncated_power_full(chain: Profile, transient: JPParams):
    if chain == Profile.TYPE_II:
        P = jp_stochastic_II(60, transient).to_dense()
        transition = km_transition
    else:
        P = jp_stochastic_I(60, transient).to_dense()
        transition = km_transition_typeI
    for r in range(1, 7):
        power = dense_power(P, r)
        for n in range(9):
            for m in range(9):
                assert abs(float(transition(n, m, r, transient)) - power[n, m]) < 1e-8


def test_generating_functions_at_zero(recurrent: JPParams):
    assert abs(generating_fn(1, 1, 0, recurrent) - 1) < TINY
    assert abs(generating_fn(0, 2, 0, recurrent)) < TINY
    assert abs(first_passage_fn(1, 1, 0, recurrent)) < TINY


def test_generating_function_matches_power_series(recurrent: JPParams):
    s = Fraction(1, 2)
    P = jp_stochastic_II(60, recurrent).to_dense()
    series = 0.0
    power = P.copy()
    for r in range(1, 61):
        series += float(s) ** r * power[0, 1]
        power = power @ P
    assert abs(float(generating_fn(0, 1, s, recurrent)) - series) < 1e-8


def first_passage_series(P: np.ndarray, start: int, target: int, s: float, steps: int) -> float:
    """sum_k s^k f_k, f_k the probability of reaching target first at step k, by taboo iteration."""
    alive = P[start].copy()
    weight = s
    total = weight * alive[target]
    alive[target] = 0
    for _ in range(steps - 1):
        alive = alive @ P
        weight *= s
        total += weight * alive[target]
        alive[target] = 0
    return total


@pytest.mark.parametrize("s", [0.3, 0.6, 0.9])
@pytest.mark.parametrize(("start", "target"), [(2, 2), (0, 3)])
def test_first_passage_matches_taboo_series(s: float, start: int, target: int, transient: JPParams):
    # 200 steps from a state below 3 stay below row 209, so the truncation is exact for the series
    P = jp_stochastic_II(210, transient).to_dense()
    series = first_passage_series(P, start, target, s, 200)
    F = first_passage_fn(start, target, s, transient)
    assert abs(float(F) - series) < 1e-7
    assert 0 < F < 1


@pytest.mark.parametrize("s", [0.3, 0.6, 0.9])
def test_renewal_identity(s: float, transient: JPParams):
    P = jp_stochastic_II(210, transient).to_dense()
    F = first_passage_series(P, 2, 2, s, 200)
    assert abs(float(generating_fn(2, 2, s, transient)) * (1 - F) - 1) < 1e-7


def test_first_passage_grows_with_s(recurrent: JPParams):
    curve = first_passage_curve(0, 0, [0.5, 0.9], recurrent)
    assert 0 < curve[0][1] < curve[1][1] < 1


@pytest.mark.slow
def test_first_passage_tends_to_one_when_recurrent(recurrent: JPParams):
    curve = first_passage_curve(0, 0, [0.9, 0.99], recurrent)
    assert curve[0][1] < curve[1][1] < 1


def test_truncated_integrals(recurrent: JPParams, transient: JPParams):
    growing = truncated_recurrence_integrals(recurrent)
    assert all(b > a for (_, a), (_, b) in zip(growing, growing[1:]))
    assert growing[-1][1] - growing[-2][1] > 1
    settled = truncated_recurrence_integrals(transient)
    assert abs(settled[-1][1] - settled[-2][1]) < 1e-8


@pytest.mark.slow
def test_classification(recurrent: JPParams, transient: JPParams):
    verdict = classify(recurrent)
    assert verdict.verdict == Recurrence.RECURRENT
    assert not verdict.stabilized
    assert [K for K, _ in verdict.quadrature_sums] == [8, 16, 32, 64, 128, 256, 512]
    verdict = classify(transient)
    assert verdict.verdict == Recurrence.TRANSIENT
    assert verdict.stabilized


def test_characteristic_roots():
    phi = char_poly(Fraction(1))
    roots = sorted(mpmath.re(r) for r in phi.roots)
    expected = [mpmath.mpf(-1) / 27, mpmath.mpf(8) / 27, mpmath.mpf(8) / 27]
    for root, value in zip(roots, expected):
        assert abs(root - value) < 1e-12
    assert phi.max_root_residual() < mpmath.mpf(10) ** -30
    reciprocal = sorted(mpmath.re(r) for r in phi.reciprocal().roots)
    for root, value in zip(reciprocal, [mpmath.mpf(-27), mpmath.mpf(27) / 8, mpmath.mpf(27) / 8]):
        assert abs(root - value) < 1e-12
    assert double_root() == Fraction(8, 27)


def test_depressed_polynomials():
    phi = char_poly(Fraction(1))
    depressed = phi.depressed(Fraction(8, 27))
    assert abs(depressed.remainder) < mpmath.mpf(10) ** -30
    # -(r - 8/27)(r + 1/27)
    assert abs(depressed(mpmath.mpf(0)) - mpmath.mpf(8) / 729) < mpmath.mpf(10) ** -30
    reduced = phi.reciprocal().depressed(Fraction(8, 27))
    # -(1 - 8r/27)(1 + r/27)
    assert abs(reduced(mpmath.mpf(0)) + 1) < mpmath.mpf(10) ** -30
    assert abs(reduced(mpmath.mpf(1)) + mpmath.mpf(532) / 729) < mpmath.mpf(10) ** -30
    with pytest.raises(InexactDivision):
        _ = phi.depressed(Fraction(1, 2))


def test_ratio_asymptotics_needs_enough_terms(recurrent: JPParams):
    with pytest.raises(ValueError):
        _ = ratio_asymptotics(RatioKind.TYPE_II, 40, recurrent)


@pytest.mark.slow
def test_ratio_limits(recurrent: JPParams):
    B = ratio_asymptotics(RatioKind.TYPE_II, 500, recurrent)
    assert abs(B.estimate - mpmath.mpf(8) / 27) < 1e-6
    assert abs(B.nearest_root - mpmath.mpf(8) / 27) < 1e-12
    Q = ratio_asymptotics(RatioKind.TYPE_I, 500, recurrent)
    assert abs(Q.estimate - mpmath.mpf(27) / 8) < 1e-6
    assert abs(kappa_ratio(402, recurrent) - 1) < 1e-4


def test_christoffel_darboux(recurrent: JPParams):
    residuals = cd_checks(4, Fraction(1), Fraction(1, 2), recurrent)
    assert residuals.cd < TINY
    assert residuals.regularity < TINY
    assert residuals.confluent < TINY
    with mpmath.workprec(256):
        direct = cd_kernel(4, Fraction(1), Fraction(1, 2), recurrent)
        assert abs(residuals.kernel - direct) < TINY


def test_christoffel_darboux_needs_two_terms(recurrent: JPParams):
    with pytest.raises(ValueError):
        _ = cd_checks(1, Fraction(1), Fraction(1, 2), recurrent)
