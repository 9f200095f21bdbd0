"""Karlin-McGregor representation, generating functions, recurrence classification,
characteristic roots and Christoffel-Darboux identities."""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction

import mpmath
import sympy

from jpwalks.banded import Profile
from jpwalks.errors import InexactDivision, NoConvergence, PrecisionLoss
from jpwalks.jacobi_pineiro import (
    DEFAULT_PRECISION,
    KAPPA,
    asymptotic_coeffs,
    jacobi_band,
    q_at,
    stepline_typeII,
    typeI_closed,
    typeI_normalized,
    typeII_at_one_sequence,
)
from jpwalks.markov_build import typeI_at_one_sequence
from jpwalks.moment_oracle import linear_form_integral
from jpwalks.params import JPParams, to_mpf
from jpwalks.polynomials import X, HighPrecPoly, RationalPoly, sum_with_loss
from jpwalks.quadrature import (
    KERNEL_TOLERANCE,
    NODE_CAP,
    Refinement,
    gauss_jacobi_rule,
    refine_until_stable,
)

logger = logging.getLogger(__name__)

DIAGNOSTIC_PRECISION = 64
TRUNCATION_EPSILONS = tuple(Fraction(1, 10**k) for k in range(2, 21, 2))
STABLE_TOLERANCE = 1e-8


# Karlin-McGregor


def _form_integral(
    B: RationalPoly,
    form: tuple[HighPrecPoly, HighPrecPoly],
    r: int,
    params: JPParams,
    precision: int,
    kernel: Callable[[mpmath.mpf], mpmath.mpf] | None = None,
    nodes: int | None = None,
) -> mpmath.mpf:
    """Integral of x^r B(x) Q(x) (times kernel(x)), one Gauss-Jacobi rule per weight component."""
    terms = list[mpmath.mpf]()
    with mpmath.workprec(precision):
        for a, A in enumerate(form, start=1):
            if A.degree < 0:
                continue
            K = nodes if nodes is not None else (r + B.degree + A.degree) // 2 + 1
            rule = gauss_jacobi_rule(K, params.weight_exponent(a), params.gamma, precision)
            for x, w in zip(rule.nodes, rule.weights):
                value = w * x**r * B(x) * A(x)
                terms.append(value * kernel(x) if kernel is not None else value)
        total, lost = sum_with_loss(terms)
    if lost > precision / 2:
        raise PrecisionLoss("Karlin-McGregor integral", lost, precision)
    return total


def km_transition(n: int, m: int, r: int, params: JPParams, precision: int = DEFAULT_PRECISION) -> mpmath.mpf:
    """r-step probability n -> m of the type II chain."""
    bvals = typeII_at_one_sequence(max(n, m) + 1, params)
    integral = _form_integral(stepline_typeII(n, params), typeI_closed(m + 1, params, precision), r, params, precision)
    with mpmath.workprec(precision):
        return to_mpf(bvals[m] / bvals[n]) * integral


def km_transition_typeI(n: int, m: int, r: int, params: JPParams, precision: int = DEFAULT_PRECISION) -> mpmath.mpf:
    """r-step probability n -> m of the type I chain."""
    qn = q_at(n + 1, Fraction(1), params, precision).q_value
    qm = q_at(m + 1, Fraction(1), params, precision).q_value
    integral = _form_integral(stepline_typeII(m, params), typeI_closed(n + 1, params, precision), r, params, precision)
    with mpmath.workprec(precision):
        return qm / qn * integral


def km_transition_exact(n: int, m: int, r: int, params: JPParams) -> Fraction:
    """Type II r-step probability through normalized moments."""
    bvals = typeII_at_one_sequence(max(n, m) + 1, params)
    B = stepline_typeII(n, params).shift(r)
    return bvals[m] / bvals[n] * linear_form_integral(B, typeI_normalized(m + 1, params), params)


# Generating functions


def _kernel_integral(
    B: RationalPoly,
    form_index: int,
    s: mpmath.mpf,
    params: JPParams,
    precision: int,
    what: str,
    tolerance: float,
    cap: int,
) -> Refinement:
    form = typeI_closed(form_index, params, precision)
    start = max(8, (B.degree + max(A.degree for A in form)) // 2 + 1)
    with mpmath.workprec(precision):
        return refine_until_stable(
            lambda K: _form_integral(B, form, 0, params, precision, kernel=lambda x: 1 / (1 - s * x), nodes=K),
            what,
            start=start,
            tolerance=tolerance,
            cap=cap,
        )


def generating_fn(
    n: int,
    m: int,
    s: Fraction | float,
    params: JPParams,
    chain: Profile = Profile.TYPE_II,
    precision: int = DEFAULT_PRECISION,
    tolerance: float = KERNEL_TOLERANCE,
    cap: int = NODE_CAP,
) -> mpmath.mpf:
    """sum_r s^r P^r[n][m] for |s| < 1."""
    with mpmath.workprec(precision):
        s_mp = to_mpf(s) if isinstance(s, Fraction | int) else mpmath.mpf(s)
        if abs(s_mp) >= 1:
            raise ValueError(f"Generating functions need |s| < 1; got {s}.")
        what = f"P_{n}{m}({mpmath.nstr(s_mp, 6)})"
        if chain == Profile.TYPE_II:
            bvals = typeII_at_one_sequence(max(n, m) + 1, params)
            refinement = _kernel_integral(stepline_typeII(n, params), m + 1, s_mp, params, precision, what, tolerance, cap)
            return to_mpf(bvals[m] / bvals[n]) * refinement.value
        qn = q_at(n + 1, Fraction(1), params, precision).q_value
        qm = q_at(m + 1, Fraction(1), params, precision).q_value
        refinement = _kernel_integral(stepline_typeII(m, params), n + 1, s_mp, params, precision, what, tolerance, cap)
        return qm / qn * refinement.value


def first_passage_fn(
    n: int,
    m: int,
    s: Fraction | float,
    params: JPParams,
    chain: Profile = Profile.TYPE_II,
    precision: int = DEFAULT_PRECISION,
    tolerance: float = KERNEL_TOLERANCE,
    cap: int = NODE_CAP,
) -> mpmath.mpf:
    with mpmath.workprec(precision):
        P_mm = generating_fn(m, m, s, params, chain, precision, tolerance, cap)
        if n == m:
            return 1 - 1 / P_mm
        return generating_fn(n, m, s, params, chain, precision, tolerance, cap) / P_mm


def first_passage_curve(
    n: int,
    m: int,
    s_values: Sequence[Fraction | float],
    params: JPParams,
    chain: Profile = Profile.TYPE_II,
    precision: int = DEFAULT_PRECISION,
    tolerance: float = KERNEL_TOLERANCE,
    cap: int = NODE_CAP,
) -> list[tuple[mpmath.mpf, mpmath.mpf]]:
    curve = list[tuple[mpmath.mpf, mpmath.mpf]]()
    for s in s_values:
        point = to_mpf(s) if isinstance(s, Fraction | int) else mpmath.mpf(s)
        curve.append((point, first_passage_fn(n, m, s, params, chain, precision, tolerance, cap)))
    return curve


# Classification


class Recurrence(StrEnum):
    RECURRENT = "recurrent"
    TRANSIENT = "transient"


@dataclass(frozen=True)
class Classification:
    verdict: Recurrence
    reason: str
    # (nodes, Gauss sum of the weight over 1 - x/lambda)
    quadrature_sums: tuple[tuple[int, mpmath.mpf], ...]
    # (epsilon, integral of x^alpha (1-x)^(gamma-1) over [0, 1-epsilon])
    truncated: tuple[tuple[Fraction, mpmath.mpf], ...]
    stabilized: bool


def truncated_recurrence_integrals(
    params: JPParams, eps_list: Sequence[Fraction] = TRUNCATION_EPSILONS, precision: int = DIAGNOSTIC_PRECISION
) -> list[tuple[Fraction, mpmath.mpf]]:
    # 1 - epsilon must stay distinct from 1
    with mpmath.workprec(max(precision, 128)):
        a, b = to_mpf(params.alpha + 1), to_mpf(params.gamma)
        return [(eps, mpmath.betainc(a, b, 0, 1 - to_mpf(eps))) for eps in eps_list]


def recurrence_quadrature_sums(
    params: JPParams, lam: Fraction = Fraction(1), precision: int = DIAGNOSTIC_PRECISION
) -> list[tuple[int, mpmath.mpf]]:
    sums = list[tuple[int, mpmath.mpf]]()
    K = 8
    while K <= NODE_CAP:
        rule = gauss_jacobi_rule(K, params.alpha, params.gamma, precision)
        with mpmath.workprec(precision):
            sums.append((K, rule.integrate(lambda x: 1 / (1 - x / to_mpf(lam)))))
        K *= 2
    return sums


def classify(params: JPParams, lam: Fraction = Fraction(1), precision: int = DIAGNOSTIC_PRECISION) -> Classification:
    """Recurrent exactly when gamma < 0; the integrals are reported as diagnostics only."""
    if params.gamma < 0:
        verdict, reason = Recurrence.RECURRENT, f"gamma = {params.gamma} lies in (-1, 0)"
    else:
        verdict, reason = Recurrence.TRANSIENT, f"gamma = {params.gamma} >= 0"
    truncated = truncated_recurrence_integrals(params, precision=precision)
    sums = recurrence_quadrature_sums(params, lam, precision)
    stabilized = abs(truncated[-1][1] - truncated[-2][1]) < STABLE_TOLERANCE
    logger.info(
        "classification %s; truncated integral %s, %s nodes give %s",
        verdict,
        "stabilized" if stabilized else "still growing",
        sums[-1][0],
        mpmath.nstr(sums[-1][1], 10),
    )
    return Classification(verdict, reason, tuple(sums), tuple(truncated), stabilized)


# Characteristic polynomial


@dataclass(frozen=True)
class DepressedPoly:
    # ascending degree
    coefficients: tuple[mpmath.mpf, ...]
    remainder: mpmath.mpf
    precision: int

    def __call__(self, r: mpmath.mpf):
        with mpmath.workprec(self.precision):
            return mpmath.polyval(list(reversed(self.coefficients)), r)


def _synthetic_division(descending: Sequence[mpmath.mpf], root: mpmath.mpf) -> tuple[list[mpmath.mpf], mpmath.mpf]:
    quotient = [descending[0]]
    for c in descending[1:]:
        quotient.append(c + quotient[-1] * root)
    return quotient[:-1], quotient[-1]


@dataclass(frozen=True)
class CharPoly:
    """phi(r) = kappa^3 + 3 kappa^2 r + (3 kappa - lambda) r^2 + r^3 (or its reciprocal)."""

    # ascending degree
    coefficients: tuple[Fraction, ...]
    lam: Fraction
    roots: tuple[mpmath.mpc | mpmath.mpf, ...]
    precision: int
    reciprocal_form: bool = False

    def __call__(self, r: mpmath.mpf):
        with mpmath.workprec(self.precision):
            return mpmath.polyval([to_mpf(c) for c in reversed(self.coefficients)], r)

    def reciprocal(self) -> "CharPoly":
        """r^3 phi(1/r)."""
        with mpmath.workprec(self.precision):
            roots = tuple(1 / root for root in self.roots)
        return CharPoly(tuple(reversed(self.coefficients)), self.lam, roots, self.precision, not self.reciprocal_form)

    def max_root_residual(self):
        return max(abs(self(root)) for root in self.roots)

    def depressed(self, root: Fraction | mpmath.mpf, tolerance: mpmath.mpf | None = None) -> DepressedPoly:
        """-phi(r)/(r - root), or -phi*(r)/(1 - root r) on the reciprocal form."""
        with mpmath.workprec(self.precision):
            tolerance = mpmath.ldexp(1, -self.precision // 2) if tolerance is None else tolerance
            root_mp = to_mpf(root) if isinstance(root, Fraction | int) else mpmath.mpf(root)
            descending = [to_mpf(c) for c in reversed(self.coefficients)]
            if self.reciprocal_form:
                # 1 - root r = -root (r - 1/root)
                quotient, remainder = _synthetic_division(descending, 1 / root_mp)
                quotient = [q / root_mp for q in quotient]
            else:
                quotient, remainder = _synthetic_division(descending, root_mp)
                quotient = [-q for q in quotient]
            if abs(remainder) > tolerance:
                raise InexactDivision(root, mpmath.nstr(remainder, 5))
            return DepressedPoly(tuple(reversed(quotient)), remainder, self.precision)


def char_poly(lam: Fraction = Fraction(1), precision: int = DEFAULT_PRECISION) -> CharPoly:
    b, c, d = asymptotic_coeffs()
    coefficients = (d, c, b - lam, Fraction(1))
    poly = sympy.Poly([sympy.Rational(q.numerator, q.denominator) for q in reversed(coefficients)], X)
    digits = int(precision * 0.30103) + 5
    with mpmath.workprec(precision):
        roots = list[mpmath.mpc | mpmath.mpf]()
        for root in poly.all_roots():
            if root.is_Rational:
                roots.append(to_mpf(Fraction(int(root.p), int(root.q))))
                continue
            re, im = sympy.N(root, digits).as_real_imag()
            roots.append(mpmath.mpf(str(re)) if im == 0 else mpmath.mpc(str(re), str(im)))
    logger.debug("characteristic roots at lambda = %s: %s", lam, [mpmath.nstr(r, 12) for r in roots])
    return CharPoly(coefficients, Fraction(lam), tuple(roots), precision)


# Ratio asymptotics


class RatioKind(StrEnum):
    TYPE_II = "B"  # B^(l+1)(1)/B^(l)(1)
    TYPE_I = "Q"  # Q^(l+1)(1)/Q^(l)(1)


@dataclass(frozen=True)
class RatioEstimate:
    kind: RatioKind
    estimate: mpmath.mpf
    change: mpmath.mpf
    nearest_root: mpmath.mpf
    distance: mpmath.mpf
    # (k, period-averaged ratio at n = 2k)
    samples: tuple[tuple[int, mpmath.mpf], ...]


def _period_ratios(values: Sequence[mpmath.mpf]) -> list[mpmath.mpf]:
    # geometric mean over one period of the two-step ladder
    return [mpmath.sqrt(values[2 * k + 2] / values[2 * k]) for k in range((len(values) - 1) // 2)]


def ratio_asymptotics(
    kind: RatioKind,
    L: int,
    params: JPParams,
    precision: int = DEFAULT_PRECISION,
    points: int = 20,
    tolerance: float = 1e-6,
) -> RatioEstimate:
    """Richardson-extrapolated limit of consecutive ratios, compared with the characteristic roots."""
    if L < 4 * points:
        raise ValueError(f"Ratio asymptotics needs L >= {4 * points}; got {L}.")
    with mpmath.workprec(precision):
        if kind == RatioKind.TYPE_II:
            values = [to_mpf(b) for b in typeII_at_one_sequence(L, params)]
        else:
            values = typeI_at_one_sequence(L, params, precision)
        ratios = _period_ratios(values)
        h = (len(ratios) - 1) // points
        samples = [(j * h, ratios[j * h]) for j in range(1, points + 1)]
        estimate, _ = mpmath.richardson([v for _, v in samples])
        coarse, _ = mpmath.richardson([v for _, v in samples[:-4]])
        change = abs(estimate - coarse)
        if change > tolerance:
            raise NoConvergence(
                f"{kind} ratio estimates {mpmath.nstr(estimate, 10)} and {mpmath.nstr(coarse, 10)} disagree"
            )
        phi = char_poly(Fraction(1), precision)
        candidates = phi.reciprocal().roots if kind == RatioKind.TYPE_I else phi.roots
        real_roots = [mpmath.re(r) for r in candidates if abs(mpmath.im(r)) < tolerance and mpmath.re(r) > 0]
        nearest = min(real_roots, key=lambda r: abs(r - estimate))
        return RatioEstimate(kind, estimate, change, nearest, abs(nearest - estimate), tuple(samples))


def kappa_ratio(L: int, params: JPParams, precision: int = DEFAULT_PRECISION) -> mpmath.mpf:
    """kappa_{L-1}/kappa_{L-2}, which tends to 1."""
    bvals = typeII_at_one_sequence(L, params)
    qvals = typeI_at_one_sequence(L, params, precision)
    with mpmath.workprec(precision):
        return to_mpf(bvals[-1] / bvals[-2]) * qvals[-1] / qvals[-2]


# Christoffel-Darboux


@dataclass(frozen=True)
class CDResiduals:
    kernel: mpmath.mpf
    cd: mpmath.mpf
    regularity: mpmath.mpf
    confluent: mpmath.mpf


def cd_kernel(n: int, x: Fraction | mpmath.mpf, y: Fraction | mpmath.mpf, params: JPParams, precision: int = DEFAULT_PRECISION):
    """K^(n)(x, y) = sum_{k<n} Q^(k)(x) B^(k)(y)."""
    with mpmath.workprec(precision):
        y_mp = to_mpf(y) if isinstance(y, Fraction | int) else mpmath.mpf(y)
        return mpmath.fsum(
            q_at(k + 1, x, params, precision).q_value * stepline_typeII(k, params)(y_mp) for k in range(n)
        )


def _cd_right_side(
    n: int, x, y: mpmath.mpf, params: JPParams, precision: int, derivative: bool = False
) -> mpmath.mpf:
    J = jacobi_band(n + 2, params)
    B = [stepline_typeII(k, params) for k in range(n - 2, n + 1)]
    if derivative:
        B = [p.derivative() for p in B]
    B_n2, B_n1, B_n = (p(y) for p in B)
    Q = {k: q_at(k + 1, x, params, precision).q_value for k in (n - 1, n, n + 1)}
    return (
        Q[n - 1] * B_n
        - Q[n] * (to_mpf(J[n, n - 1]) * B_n1 + to_mpf(J[n, n - 2]) * B_n2)
        - Q[n + 1] * to_mpf(J[n + 1, n - 1]) * B_n1
    )


def cd_checks(
    n: int, x: Fraction | mpmath.mpf, y: Fraction | mpmath.mpf, params: JPParams, precision: int = DEFAULT_PRECISION
) -> CDResiduals:
    """Residuals of the kernel formula at (x, y), its vanishing at y = x and its confluent form."""
    if n < 2:
        raise ValueError(f"The kernel identities need n >= 2; got {n}.")
    with mpmath.workprec(precision):
        x_mp = to_mpf(x) if isinstance(x, Fraction | int) else mpmath.mpf(x)
        y_mp = to_mpf(y) if isinstance(y, Fraction | int) else mpmath.mpf(y)
        K_xy = cd_kernel(n, x, y_mp, params, precision)
        cd = abs((y_mp - x_mp) * K_xy - _cd_right_side(n, x, y_mp, params, precision))
        regularity = abs(_cd_right_side(n, x, x_mp, params, precision))
        K_xx = cd_kernel(n, x, x_mp, params, precision)
        confluent = abs(K_xx - _cd_right_side(n, x, x_mp, params, precision, derivative=True))
        return CDResiduals(K_xy, cd, regularity, confluent)


def double_root() -> Fraction:
    """The double characteristic root 2 kappa at lambda = 1."""
    return 2 * KAPPA
