from fractions import Fraction
from math import sqrt

import numpy as np
import pytest

from jpwalks.banded import BandedOperator, Profile, ValueMode
from jpwalks.errors import InsufficientData, InvalidParams
from jpwalks.markov_build import jp_stochastic_II
from jpwalks.params import JPParams
from jpwalks.walk_sim import (
    Boundary,
    SimConfig,
    binomial_band,
    empirical_transition,
    first_passage_empirical,
    simulate,
    step_uniforms,
    truncate,
)


def test_config_validation():
    with pytest.raises(InvalidParams):
        _ = SimConfig(truncation=5)
    with pytest.raises(InvalidParams):
        _ = SimConfig(truncation=20, starts=[20])
    with pytest.raises(InvalidParams):
        _ = SimConfig(trials=0)


def test_renormalized_rows_sum_to_one(recurrent: JPParams):
    P = jp_stochastic_II(30, recurrent)
    chain = truncate(P, SimConfig(truncation=20, boundary=Boundary.RENORMALIZE))
    assert chain.sink is None
    assert chain.size == 20
    for n in range(chain.size):
        assert chain.row_sum(n) == 1
    assert chain.rows[5] == P.row(5)


def test_absorbing_boundary_keeps_dropped_mass(recurrent: JPParams):
    P = jp_stochastic_II(30, recurrent)
    chain = truncate(P, SimConfig(truncation=20, boundary=Boundary.ABSORB))
    assert chain.sink == 20
    assert chain.rows[19][20] == P[19, 20]
    assert chain.rows[20] == {20: Fraction(1)}
    for n in range(chain.size):
        assert chain.row_sum(n) == 1


def test_truncation_needs_complete_rows(recurrent: JPParams):
    with pytest.raises(InvalidParams):
        _ = truncate(jp_stochastic_II(12, recurrent), SimConfig(truncation=20))


def test_uniforms_are_reproducible():
    assert np.array_equal(step_uniforms(7, 3, 100), step_uniforms(7, 3, 100))
    assert not np.array_equal(step_uniforms(7, 3, 100), step_uniforms(7, 4, 100))
    # trial i draws the same value whatever the batch size
    assert np.array_equal(step_uniforms(7, 3, 100)[:10], step_uniforms(7, 3, 10))


def test_self_loops_never_move():
    P = BandedOperator.zeros(12, 2, 1, ValueMode.RATIONAL, Profile.TYPE_II)
    for n in range(12):
        P[n, n] = Fraction(1)
    config = SimConfig(truncation=12, trials=50, horizon=5, starts=[3], targets=[3, 4])
    stats = simulate(truncate(P, config), config)
    assert {(c.to, c.count) for c in stats.transition_counts} == {(3, 50)}
    assert first_passage_empirical(stats, 3, 3) == [1.0] * 5
    assert first_passage_empirical(stats, 3, 4) == [0.0] * 5


def test_reruns_are_identical(recurrent: JPParams):
    config = SimConfig(truncation=20, trials=500, horizon=30, seed=11, starts=[0, 2])
    chain = truncate(jp_stochastic_II(20, recurrent), config)
    assert simulate(chain, config) == simulate(chain, config)


@pytest.mark.parametrize("trials", [20_000, pytest.param(100_000, marks=pytest.mark.slow)])
def test_empirical_frequencies_within_binomial_bands(trials: int, recurrent: JPParams):
    config = SimConfig(truncation=60, trials=trials, horizon=3, seed=3, starts=list(range(5)), record_steps=3)
    P = jp_stochastic_II(60, recurrent)
    stats = simulate(truncate(P, config), config)
    exact = P.to_exact_rows()
    cube = [[sum((exact[i][k] * exact[k][j] for k in range(60)), Fraction(0)) for j in range(60)] for i in range(5)]
    cube = [[sum((cube[i][k] * exact[k][j] for k in range(60)), Fraction(0)) for j in range(60)] for i in range(5)]
    for step, table in ((1, exact), (3, cube)):
        for n in range(5):
            for m in range(5):
                p = float(table[n][m])
                if p * config.trials < 50:
                    continue
                lo, hi = binomial_band(p, config.trials)
                assert lo <= empirical_transition(stats, n, m, step) <= hi, f"step {step}, ({n}, {m})"


def test_first_passage_curve_is_monotone(transient: JPParams):
    config = SimConfig(truncation=40, trials=2_000, horizon=50, seed=5, starts=[0], targets=[0, 2])
    stats = simulate(truncate(jp_stochastic_II(40, transient), config), config)
    curve = first_passage_empirical(stats, 0, 2)
    assert all(b >= a for a, b in zip(curve, curve[1:]))
    assert curve[-1] <= 1
    returns = first_passage_empirical(stats, 0, 0)
    assert returns[0] == pytest.approx(1 / 3, abs=0.05)
    with pytest.raises(InsufficientData):
        _ = first_passage_empirical(stats, 1, 2)


def test_binomial_band():
    lo, hi = binomial_band(0.5, 10_000)
    assert lo == pytest.approx(0.48)
    assert hi == pytest.approx(0.52)


def passage_by_horizon(params: JPParams, truncation: int, **kwargs: object) -> dict[tuple[int, int], float]:
    config = SimConfig(truncation=truncation, **kwargs)
    stats = simulate(truncate(jp_stochastic_II(truncation, params), config), config)
    return {(fp.start, fp.target): sum(fp.histogram) / stats.trials_per_start for fp in stats.first_passage}


@pytest.mark.parametrize("name", ["recurrent", "transient"])
def test_doubling_the_truncation_leaves_low_states_alone(name: str, request: pytest.FixtureRequest):
    params: JPParams = request.getfixturevalue(name)
    trials = 10_000
    settings = dict(trials=trials, horizon=100, seed=13, starts=[0, 3, 6], targets=list(range(10)))
    small = passage_by_horizon(params, 40, **settings)
    large = passage_by_horizon(params, 80, **settings)
    assert small.keys() == large.keys()
    for key, p in small.items():
        sigma = sqrt(p * (1 - p) / trials)
        assert abs(p - large[key]) <= 2 * sigma, key


def test_return_trends(recurrent: JPParams, transient: JPParams):
    settings = dict(trials=4_000, horizon=2_000, seed=21, starts=[0], targets=[0])
    curves = dict[str, list[float]]()
    for name, params in (("recurrent", recurrent), ("transient", transient)):
        config = SimConfig(truncation=300, **settings)
        stats = simulate(truncate(jp_stochastic_II(300, params), config), config)
        curves[name] = first_passage_empirical(stats, 0, 0)
    recurrent_curve, transient_curve = curves["recurrent"], curves["transient"]
    assert recurrent_curve[19] < recurrent_curve[199] < recurrent_curve[-1]
    assert recurrent_curve[-1] > 0.9
    # the transient walk returns with probability gamma / (alpha + gamma + 1) = 3/5
    upper = binomial_band(0.6, 4_000)[1]
    assert 0.5 < transient_curve[-1] <= upper
    assert transient_curve[-1] - transient_curve[199] < 0.05
    assert recurrent_curve[-1] - transient_curve[-1] > 0.25
