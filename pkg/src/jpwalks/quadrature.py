"""Gauss-Jacobi rules for x^a (1-x)^gamma on [0, 1] at arbitrary precision."""

import logging
import threading
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from jpwalks.errors import ConvergenceFailure, SlowConvergence
from jpwalks.params import to_mpf

logger = logging.getLogger(__name__)

KERNEL_TOLERANCE = 1e-10
NODE_CAP = 512
NEWTON_STEPS = 100


def jacobi_recurrence(K: int, a: Fraction, gamma: Fraction) -> tuple[list[Fraction], list[Fraction]]:
    """Monic recurrence p_{k+1} = (x - a_k) p_k - b_k p_{k-1} for x^a (1-x)^gamma on [0, 1].

    Returns (a_0..a_{K-1}, b_1..b_{K-1})."""
    # (1-t)^A (1+t)^B on [-1, 1] with x = (1+t)/2
    A, B = gamma, a
    diagonal = list[Fraction]()
    offdiagonal = list[Fraction]()
    for k in range(K):
        if k == 0:
            alpha_k = (B - A) / (A + B + 2)
        else:
            alpha_k = (B * B - A * A) / ((2 * k + A + B) * (2 * k + A + B + 2))
        diagonal.append((1 + alpha_k) / 2)
        if k == 0:
            continue
        if k == 1:
            beta_k = 4 * (1 + A) * (1 + B) / ((2 + A + B) ** 2 * (3 + A + B))
        else:
            s = 2 * k + A + B
            beta_k = 4 * k * (k + A) * (k + B) * (k + A + B) / (s * s * (s + 1) * (s - 1))
        offdiagonal.append(beta_k / 4)
    return diagonal, offdiagonal


@dataclass(frozen=True)
class QuadratureRule:
    nodes: tuple[mpmath.mpf, ...]
    weights: tuple[mpmath.mpf, ...]
    # exponents at 0 and at 1
    weight_signature: tuple[Fraction, Fraction]
    precision: int

    @property
    def size(self):
        return len(self.nodes)

    def integrate(self, f: Callable[[mpmath.mpf], mpmath.mpf]) -> mpmath.mpf:
        with mpmath.workprec(self.precision):
            return mpmath.fsum(w * f(x) for x, w in zip(self.nodes, self.weights))


def _orthonormal_values(
    x: mpmath.mpf, mu0: mpmath.mpf, diagonal: Sequence[mpmath.mpf], roots: Sequence[mpmath.mpf]
) -> tuple[list[mpmath.mpf], mpmath.mpf, mpmath.mpf]:
    """Orthonormal p_0..p_{K-1} at x, plus p_K and p_K' (up to the last scale factor)."""
    K = len(diagonal)
    values = [1 / mpmath.sqrt(mu0)]
    previous, current = mpmath.mpf(0), values[0]
    d_previous, d_current = mpmath.mpf(0), mpmath.mpf(0)
    for k in range(K):
        lower = roots[k - 1] if k > 0 else mpmath.mpf(0)
        upper = roots[k] if k < K - 1 else mpmath.mpf(1)
        following = ((x - diagonal[k]) * current - lower * previous) / upper
        d_following = (current + (x - diagonal[k]) * d_current - lower * d_previous) / upper
        previous, current = current, following
        d_previous, d_current = d_current, d_following
        if k < K - 1:
            values.append(current)
    return values, current, d_current


def _build_rule(K: int, a: Fraction, gamma: Fraction, precision: int) -> QuadratureRule:
    diagonal_q, offdiagonal_q = jacobi_recurrence(K, a, gamma)
    seeds = np.linalg.eigvalsh(
        np.diag([float(d) for d in diagonal_q])
        + np.diag([float(b) ** 0.5 for b in offdiagonal_q], 1)
        + np.diag([float(b) ** 0.5 for b in offdiagonal_q], -1)
    )
    with mpmath.workprec(precision + 32):
        diagonal = [to_mpf(d) for d in diagonal_q]
        roots = [mpmath.sqrt(to_mpf(b)) for b in offdiagonal_q]
        mu0 = mpmath.beta(to_mpf(a + 1), to_mpf(gamma + 1))
        tolerance = mpmath.ldexp(1, -precision)
        nodes = list[mpmath.mpf]()
        weights = list[mpmath.mpf]()
        for seed in seeds:
            x = mpmath.mpf(float(seed))
            for _ in range(NEWTON_STEPS):
                _, value, derivative = _orthonormal_values(x, mu0, diagonal, roots)
                step = value / derivative
                x -= step
                if abs(step) <= tolerance * max(abs(x), tolerance):
                    break
            else:
                raise ConvergenceFailure(
                    f"Newton iteration for a node of the {K}-point rule ({a}, {gamma}) stalled near {float(x)}"
                )
            values, _, _ = _orthonormal_values(x, mu0, diagonal, roots)
            nodes.append(x)
            weights.append(1 / mpmath.fsum(v * v for v in values))
    with mpmath.workprec(precision):
        return QuadratureRule(
            tuple(+x for x in nodes), tuple(+w for w in weights), (Fraction(a), Fraction(gamma)), precision
        )


_rule_cache = dict[tuple[int, Fraction, Fraction, int], QuadratureRule]()
_rule_lock = threading.Lock()


def gauss_jacobi_rule(K: int, a: Fraction, gamma: Fraction, precision: int = 256) -> QuadratureRule:
    """K-point rule, exact for x^k x^a (1-x)^gamma with k <= 2K - 1."""
    if K < 1:
        raise ValueError(f"A quadrature rule needs at least one node; got {K}.")
    if a <= -1 or gamma <= -1:
        raise ValueError(f"Exponents ({a}, {gamma}) must exceed -1.")
    key = (K, Fraction(a), Fraction(gamma), precision)
    with _rule_lock:
        rule = _rule_cache.get(key)
    if rule is not None:
        return rule
    rule = _build_rule(K, Fraction(a), Fraction(gamma), precision)
    with _rule_lock:
        rule = _rule_cache.setdefault(key, rule)
    logger.debug("cached %d-point rule for (%s, %s) at %d bits", K, a, gamma, precision)
    return rule


@dataclass(frozen=True)
class Refinement:
    value: mpmath.mpf
    nodes: int
    change: mpmath.mpf
    history: tuple[tuple[int, mpmath.mpf], ...]


def refine_until_stable(
    evaluate: Callable[[int], mpmath.mpf],
    what: str,
    start: int = 8,
    tolerance: float = KERNEL_TOLERANCE,
    cap: int = NODE_CAP,
) -> Refinement:
    """Doubles the node count until two successive values agree to `tolerance`."""
    K = start
    history = [(K, evaluate(K))]
    while True:
        K *= 2
        if K > cap:
            _, last = history[-1]
            change = abs(last - history[-2][1]) if len(history) > 1 else mpmath.inf
            raise SlowConvergence(what, mpmath.nstr(last, 15), mpmath.nstr(change, 3))
        value = evaluate(K)
        change = abs(value - history[-1][1])
        history.append((K, value))
        logger.debug("%s with %d nodes: %s (change %s)", what, K, mpmath.nstr(value, 15), mpmath.nstr(change, 3))
        if change < tolerance:
            return Refinement(value, K, change, tuple(history))
