"""Monte Carlo walks on truncated multidiagonal chains."""

import logging
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction
from math import sqrt

import numpy as np
from serde import field, serde

from jpwalks.banded import BandedOperator, Scalar, ValueMode
from jpwalks.errors import InsufficientData, InvalidParams

logger = logging.getLogger(__name__)

type Int64Array[T: tuple[int, ...]] = np.ndarray[T, np.dtype[np.int64]]
type Float64Array[T: tuple[int, ...]] = np.ndarray[T, np.dtype[np.float64]]

MIN_TRUNCATION = 10


class Boundary(StrEnum):
    RENORMALIZE = "renormalize"
    ABSORB = "absorb"


@serde
class SimConfig:
    truncation: int = 60
    boundary: Boundary = Boundary.ABSORB
    trials: int = 10_000
    horizon: int = 100
    seed: int = 0
    starts: list[int] = field(default_factory=lambda: [0])
    record_steps: int = 3
    targets: list[int] = field(default_factory=lambda: list(range(5)))

    def __post_init__(self):
        if self.truncation < MIN_TRUNCATION:
            raise InvalidParams(f"truncation {self.truncation} is below {MIN_TRUNCATION}")
        if self.trials < 1:
            raise InvalidParams(f"trials must be positive, got {self.trials}")
        if self.horizon < 1:
            raise InvalidParams(f"horizon must be positive, got {self.horizon}")
        for state in [*self.starts, *self.targets]:
            if not 0 <= state < self.truncation:
                raise InvalidParams(f"state {state} lies outside the truncation 0..{self.truncation - 1}")


@dataclass(frozen=True)
class TruncatedChain:
    rows: tuple[dict[int, Scalar], ...]
    boundary: Boundary
    # absorbing state appended after the kept states
    sink: int | None
    # per row: reachable states and the cumulative probabilities, padded to a common width
    band_targets: Int64Array[tuple[int, int]]
    band_cdf: Float64Array[tuple[int, int]]

    @property
    def size(self):
        return len(self.rows)

    def row_sum(self, n: int) -> Scalar:
        values = list(self.rows[n].values())
        return sum(values[1:], values[0])


def truncate(P: BandedOperator, config: SimConfig) -> TruncatedChain:
    L = config.truncation
    if L > P.size - P.provisional:
        raise InvalidParams(f"truncation {L} exceeds the {P.size - P.provisional} complete rows available")
    rows = list[dict[int, Scalar]]()
    for n in range(L):
        row = P.row(n)
        kept = {m: v for m, v in row.items() if m < L and v != 0}
        dropped = sum((v for m, v in row.items() if m >= L), 0 * row[n])
        if dropped != 0:
            match config.boundary:
                case Boundary.RENORMALIZE:
                    kept = {m: v / (1 - dropped) for m, v in kept.items()}
                case Boundary.ABSORB:
                    kept[L] = dropped
        rows.append(kept)
    sink = None
    if config.boundary == Boundary.ABSORB:
        sink = L
        rows.append({L: Fraction(1) if P.mode == ValueMode.RATIONAL else 1 + 0 * P[0, 0]})
    width = max(len(row) for row in rows)
    targets = np.zeros((len(rows), width), dtype=np.int64)
    cdf = np.ones((len(rows), width), dtype=np.float64)
    for n, row in enumerate(rows):
        states = sorted(row)
        cumulative = np.cumsum([float(row[m]) for m in states])
        targets[n, : len(states)] = states
        targets[n, len(states) :] = states[-1]
        cdf[n, : len(states)] = cumulative
        cdf[n, len(states) - 1 :] = 1.0
    logger.debug("truncated chain to %d states (%s boundary)", len(rows), config.boundary)
    return TruncatedChain(tuple(rows), config.boundary, sink, targets, cdf)


@serde
class TransitionCount:
    start: int
    to: int
    step: int
    count: int


@serde
class FirstPassage:
    start: int
    target: int
    # histogram[t-1] = trajectories first reaching target at step t
    histogram: list[int]


@serde
class ReturnHistogram:
    state: int
    histogram: list[int]


@serde
class WalkStats:
    trials_per_start: int
    horizon: int
    transition_counts: list[TransitionCount] = field(default_factory=lambda: list[TransitionCount]())
    first_passage: list[FirstPassage] = field(default_factory=lambda: list[FirstPassage]())
    returns: list[ReturnHistogram] = field(default_factory=lambda: list[ReturnHistogram]())
    absorbed: int = 0


def step_uniforms(seed: int, step: int, count: int) -> Float64Array[tuple[int]]:
    """Uniforms for all trials at one step; trial i always gets entry i of the counter block."""
    bit_generator = np.random.Philox(
        key=np.array([seed, 0], dtype=np.uint64),
        counter=np.array([0, step, 0, 0], dtype=np.uint64),
    )
    return np.random.Generator(bit_generator).random(count)


def sample_step(chain: TruncatedChain, states: Int64Array[tuple[int]], u: Float64Array[tuple[int]]):
    """Inverse-CDF draw of the next state for every trajectory."""
    cdf = chain.band_cdf[states]
    column = np.minimum((u[:, None] >= cdf).sum(axis=1), cdf.shape[1] - 1)
    return chain.band_targets[states, column]


def simulate(chain: TruncatedChain, config: SimConfig) -> WalkStats:
    starts = np.asarray(config.starts, dtype=np.int64)
    trials = config.trials
    origin = np.repeat(starts, trials)
    states = origin.copy()
    tracked = sorted({*config.targets, *config.starts})
    first_hit = np.zeros((len(origin), len(tracked)), dtype=np.int64)
    stats = WalkStats(trials_per_start=trials, horizon=config.horizon)
    for step in range(1, config.horizon + 1):
        states = sample_step(chain, states, step_uniforms(config.seed, step, len(origin)))
        for k, target in enumerate(tracked):
            fresh = (states == target) & (first_hit[:, k] == 0)
            first_hit[fresh, k] = step
        if step <= config.record_steps:
            for i, start in enumerate(config.starts):
                block = states[i * trials : (i + 1) * trials]
                counts = np.bincount(block, minlength=chain.size)
                stats.transition_counts.extend(
                    TransitionCount(start, int(to), step, int(counts[to])) for to in np.flatnonzero(counts)
                )
    for i, start in enumerate(config.starts):
        block = first_hit[i * trials : (i + 1) * trials]
        for k, target in enumerate(tracked):
            histogram = np.bincount(block[:, k], minlength=config.horizon + 1)[1:]
            if target in config.targets:
                stats.first_passage.append(FirstPassage(start, target, [int(c) for c in histogram]))
            if target == start:
                stats.returns.append(ReturnHistogram(start, [int(c) for c in histogram]))
    if chain.sink is not None:
        stats.absorbed = int(np.count_nonzero(states == chain.sink))
    logger.info(
        "simulated %d trajectories for %d steps; %d absorbed", len(origin), config.horizon, stats.absorbed
    )
    return stats


def first_passage_empirical(stats: WalkStats, i: int, j: int) -> list[float]:
    """Cumulative first-passage frequencies F^n_ij for n = 1..horizon."""
    if i == j:
        histograms = [r.histogram for r in stats.returns if r.state == i]
    else:
        histograms = [r.histogram for r in stats.first_passage if r.start == i and r.target == j]
    if not histograms:
        raise InsufficientData(f"no trajectory started at {i} with target {j} tracked")
    cumulative = np.cumsum(histograms[0]) / stats.trials_per_start
    return [float(v) for v in cumulative]


def empirical_transition(stats: WalkStats, start: int, to: int, step: int) -> float:
    for record in stats.transition_counts:
        if record.start == start and record.to == to and record.step == step:
            return record.count / stats.trials_per_start
    if not any(r.start == start and r.step == step for r in stats.transition_counts):
        raise InsufficientData(f"no recorded step {step} from state {start}")
    return 0.0


def binomial_band(p: float, trials: int, sigmas: float = 4) -> tuple[float, float]:
    """p -/+ sigmas standard deviations of a binomial frequency."""
    half_width = sigmas * sqrt(p * (1 - p) / trials)
    return p - half_width, p + half_width
