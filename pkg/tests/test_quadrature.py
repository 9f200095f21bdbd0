from fractions import Fraction

import mpmath
import pytest

from jpwalks.errors import SlowConvergence
from jpwalks.moment_oracle import normalized_moment
from jpwalks.params import JPParams, to_mpf
from jpwalks.quadrature import gauss_jacobi_rule, jacobi_recurrence, refine_until_stable


def test_one_point_legendre_rule():
    rule = gauss_jacobi_rule(1, Fraction(0), Fraction(0))
    assert rule.size == 1
    assert abs(rule.nodes[0] - mpmath.mpf(1) / 2) < mpmath.mpf(10) ** -70
    assert abs(rule.weights[0] - 1) < mpmath.mpf(10) ** -70


def test_recurrence_of_legendre_on_unit_interval():
    diagonal, offdiagonal = jacobi_recurrence(3, Fraction(0), Fraction(0))
    assert diagonal == [Fraction(1, 2)] * 3
    # shifted Legendre: b_k = k^2 / (4 (4k^2 - 1))
    assert offdiagonal == [Fraction(1, 12), Fraction(1, 15)]


def test_two_point_rule_integrates_cubic():
    alpha, gamma = Fraction(-1, 4), Fraction(-1, 2)
    rule = gauss_jacobi_rule(2, alpha, gamma)
    with mpmath.workprec(256):
        value = rule.integrate(lambda x: x**3)
        expected = mpmath.beta(mpmath.mpf(3) / 4, mpmath.mpf(1) / 2) * to_mpf(
            normalized_moment(3, 1, JPParams(alpha, alpha + Fraction(1, 2), gamma))
        )
        assert abs(value - expected) < mpmath.mpf(10) ** -30


@pytest.mark.parametrize("K", [3, 10, 25, 40])
def test_rules_are_exact_to_degree_2K_minus_1(K: int):
    params = JPParams(Fraction(1, 3), Fraction(-1, 3), Fraction(1, 4))
    rule = gauss_jacobi_rule(K, params.alpha, params.gamma)
    with mpmath.workprec(256):
        mass = params.beta_constant(1, 256)
        for k in range(2 * K):
            value = rule.integrate(lambda x: x**k)
            expected = mass * to_mpf(normalized_moment(k, 1, params))
            assert abs(value - expected) < mpmath.mpf(10) ** -40 * abs(expected)


def test_rules_are_cached():
    assert gauss_jacobi_rule(6, Fraction(1, 2), Fraction(0)) is gauss_jacobi_rule(6, Fraction(1, 2), Fraction(0))


def test_invalid_rules():
    with pytest.raises(ValueError):
        _ = gauss_jacobi_rule(0, Fraction(0), Fraction(0))
    with pytest.raises(ValueError):
        _ = gauss_jacobi_rule(3, Fraction(-1), Fraction(0))


def test_refinement_stops_when_stable():
    refinement = refine_until_stable(lambda K: mpmath.mpf(1) / K**8, "decay", start=8, tolerance=1e-9)
    assert refinement.nodes == 32
    assert [K for K, _ in refinement.history] == [8, 16, 32]


def test_refinement_gives_up_past_the_cap():
    with pytest.raises(SlowConvergence):
        _ = refine_until_stable(lambda K: mpmath.mpf(K), "growth", start=8, cap=64)
