import argparse
import dataclasses
import logging
import re
import sys
from abc import ABC, abstractmethod
from fractions import Fraction
from pathlib import Path
from typing import override

import mpmath

from jpwalks.banded import Profile
from jpwalks.config import OutputFormat, RunConfig, dump_config, load_config
from jpwalks.errors import InvalidParams, InvariantViolation, JPWalksError, OracleMismatch
from jpwalks.jacobi_pineiro import (
    asymptotic_coeffs,
    jacobi_band,
    norm_H_normalized,
    positivity_region,
    recurrence_coeffs,
    stepline_typeII,
    typeI_normalized,
)
from jpwalks.markov_build import (
    jp_stochastic_I,
    jp_stochastic_II,
    left_eigen_residual,
    steady_candidate,
)
from jpwalks.moment_oracle import (
    build_moment_matrix,
    gauss_borel,
    normalized_norm,
    oracle_jacobi,
    oracle_typeI,
    oracle_typeII,
)
from jpwalks.output import (
    ClassifyDocument,
    CoeffRow,
    CoeffsDocument,
    CurveDocument,
    DiagnosticPoint,
    Document,
    Header,
    KMDocument,
    MatrixDocument,
    OracleDocument,
    RatioRow,
    SpectrumDocument,
    StatsDocument,
    SteadyDocument,
    SteadyRow,
    format_value,
    write_document,
)
from jpwalks.params import JPParams, format_rational, parse_rational
from jpwalks.spectral_analysis import (
    RatioKind,
    char_poly,
    classify,
    first_passage_fn,
    generating_fn,
    km_transition,
    km_transition_exact,
    km_transition_typeI,
    ratio_asymptotics,
)
from jpwalks.walk_sim import Boundary, first_passage_empirical, simulate, truncate

logger = logging.getLogger(__name__)

# ratio asymptotics needs this many terms to extrapolate
MIN_RATIO_SIZE = 80

# flags whose value may be a negative rational such as -1/4
RATIONAL_FLAGS = frozenset({"-a", "--alpha", "-b", "--beta", "-g", "--gamma", "--lam", "--s-values"})
NEGATIVE_VALUE = re.compile(r"-\d[\d./,-]*")


def chain_type(s: str) -> Profile:
    match s.lower():
        case "ii" | "2":
            return Profile.TYPE_II
        case "i" | "1":
            return Profile.TYPE_I
        case _:
            raise argparse.ArgumentTypeError(f'Chain type "{s}" is not one of ii/i.')


def state_pair(s: str) -> tuple[int, int]:
    match s.split(","):
        case start, target:
            return int(start), int(target)
        case _:
            raise argparse.ArgumentTypeError(f'"{s}" is not of the form FROM,TO.')


def s_values(s: str) -> list[Fraction]:
    try:
        return [parse_rational(v) for v in s.split(",")]
    except InvalidParams as e:
        raise argparse.ArgumentTypeError(str(e))


class Command(ABC):
    config: RunConfig
    params: JPParams
    violation: str | None = None

    def __init__(self, config: RunConfig):
        super().__init__()
        self.config = config
        self.params = config.params()

    @classmethod
    @abstractmethod
    def cli_name(cls) -> str: ...

    @classmethod
    @abstractmethod
    def help(cls) -> str: ...

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        pass

    @abstractmethod
    def run(self, args: argparse.Namespace) -> Document: ...

    def check(self, document: Document) -> None:
        """Raises once the document is written if run recorded a violated invariant."""
        if self.violation is not None:
            raise InvariantViolation(self.violation)

    def audit_tolerance(self, scale: mpmath.mpf | float = 1) -> mpmath.mpf:
        """Half the working bits, relative to scale when that exceeds 1."""
        return mpmath.ldexp(1, -self.config.precision // 2) * max(1, abs(scale))

    def header(self, truncation: int | None = None, seed: int | None = None):
        return Header.create(self.cli_name(), self.params, self.config.precision, truncation, seed)


class CoeffsCommand(Command):
    @override
    @classmethod
    def cli_name(cls):
        return "coeffs"

    @override
    @classmethod
    def help(cls):
        return "Recurrence coefficients b, c, d of the Jacobi operator as exact rationals."

    @override
    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser):
        _ = parser.add_argument("-n", "--n-max", type=int, default=5, help="Last index n (default: 5).")
        _ = parser.add_argument("--limits", action="store_true", help="Append the large-n limits.")

    @override
    def run(self, args: argparse.Namespace):
        rows = list[CoeffRow]()
        for n in range(args.n_max + 1):
            band = recurrence_coeffs(n, self.params)
            rows.append(
                CoeffRow(
                    n,
                    *(format_rational(v) for v in (band.b_even, band.b_odd, band.c_even, band.c_odd, band.d_even, band.d_odd)),
                )
            )
        limits = [format_rational(v) for v in asymptotic_coeffs()] if args.limits else None
        return CoeffsDocument(self.header(), rows, limits)


class StochasticCommand(Command):
    @override
    @classmethod
    def cli_name(cls):
        return "stochastic"

    @override
    @classmethod
    def help(cls):
        return "Type II (exact) or type I (high precision) stochastic matrix with a row-sum audit."

    @override
    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser):
        _ = parser.add_argument("--type", type=chain_type, default=Profile.TYPE_II, help="ii or i (default: ii).")

    @override
    def run(self, args: argparse.Namespace):
        L = self.config.size
        if args.type == Profile.TYPE_II:
            P = jp_stochastic_II(L, self.params)
            tolerance = Fraction(0)
        else:
            P = jp_stochastic_I(L, self.params, self.config.precision, self.config.max_precision)
            tolerance = self.audit_tolerance()
        residual = P.row_sum_residual()
        if residual > tolerance:
            self.violation = f"row sums deviate from 1 by {format_value(residual)}"
        elif not P.is_nonnegative():
            self.violation = "the matrix has a negative entry"
        return MatrixDocument.create(self.header(L), P)


class SimulateCommand(Command):
    @override
    @classmethod
    def cli_name(cls):
        return "simulate"

    @override
    @classmethod
    def help(cls):
        return "Monte Carlo walks on the truncated chain."

    @override
    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser):
        _ = parser.add_argument("--type", type=chain_type, default=Profile.TYPE_II, help="ii or i (default: ii).")
        _ = parser.add_argument("--trials", type=int, help="Trajectories per start state.")
        _ = parser.add_argument("--horizon", type=int, help="Steps per trajectory.")
        _ = parser.add_argument("--boundary", choices=[b.value for b in Boundary], help="Truncation boundary.")
        _ = parser.add_argument("--start", type=int, action="append", help="Start state (repeatable).")
        _ = parser.add_argument("--target", type=int, action="append", help="First-passage target (repeatable).")
        _ = parser.add_argument(
            "--curve", type=state_pair, help="Emit the empirical first-passage curve FROM,TO instead of counts."
        )

    @override
    def run(self, args: argparse.Namespace):
        overrides = dict[str, object]()
        for name in ("trials", "horizon"):
            if getattr(args, name) is not None:
                overrides[name] = getattr(args, name)
        if args.boundary is not None:
            overrides["boundary"] = Boundary(args.boundary)
        if args.start:
            overrides["starts"] = args.start
        if args.target:
            overrides["targets"] = args.target
        sim = self.config.simulation
        if args.curve is not None:
            start, target = args.curve
            overrides["starts"] = sorted({*overrides.get("starts", sim.starts), start})
            overrides["targets"] = sorted({*overrides.get("targets", sim.targets), target})
        sim = dataclasses.replace(sim, **overrides)
        if args.type == Profile.TYPE_II:
            P = jp_stochastic_II(sim.truncation, self.params)
        else:
            P = jp_stochastic_I(sim.truncation, self.params, self.config.precision, self.config.max_precision)
        stats = simulate(truncate(P, sim), sim)
        header = self.header(sim.truncation, sim.seed)
        if args.curve is not None:
            start, target = args.curve
            curve = first_passage_empirical(stats, start, target)
            return CurveDocument(header, ["n", "F"], [[str(n), repr(v)] for n, v in enumerate(curve, start=1)])
        return StatsDocument(header, str(sim.boundary), stats)


class ClassifyCommand(Command):
    @override
    @classmethod
    def cli_name(cls):
        return "classify"

    @override
    @classmethod
    def help(cls):
        return "Recurrent or transient, with the divergence diagnostics."

    @override
    def run(self, args: argparse.Namespace):
        result = classify(self.params, self.config.lam_value())
        precision = self.config.precision
        return ClassifyDocument(
            self.header(),
            str(result.verdict),
            result.reason,
            [DiagnosticPoint(str(K), format_value(v, precision)) for K, v in result.quadrature_sums],
            [DiagnosticPoint(format_rational(eps), format_value(v, precision)) for eps, v in result.truncated],
            result.stabilized,
        )


class KMCommand(Command):
    @override
    @classmethod
    def cli_name(cls):
        return "kmg"

    @override
    @classmethod
    def help(cls):
        return "r-step transition probability from the integral representation, or generating functions."

    @override
    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser):
        _ = parser.add_argument("-n", type=int, default=0, help="From state (default: 0).")
        _ = parser.add_argument("-m", type=int, default=0, help="To state (default: 0).")
        _ = parser.add_argument("-r", type=int, default=1, help="Number of steps (default: 1).")
        _ = parser.add_argument("--type", type=chain_type, default=Profile.TYPE_II, help="ii or i (default: ii).")
        _ = parser.add_argument(
            "--s-values",
            type=s_values,
            help="Comma-separated s in (-1, 1); emits P_nm(s) and F_nm(s) instead of a probability.",
        )

    @override
    def run(self, args: argparse.Namespace):
        precision = self.config.precision
        quadrature = self.config.quadrature
        if args.s_values is not None:
            rows = list[list[str]]()
            for s in args.s_values:
                P = generating_fn(
                    args.n, args.m, s, self.params, args.type, precision, quadrature.kernel_tolerance, quadrature.node_cap
                )
                F = first_passage_fn(
                    args.n, args.m, s, self.params, args.type, precision, quadrature.kernel_tolerance, quadrature.node_cap
                )
                rows.append([format_rational(s), format_value(P, precision), format_value(F, precision)])
            return CurveDocument(self.header(), ["s", "P", "F"], rows)
        if args.type == Profile.TYPE_II:
            value = km_transition(args.n, args.m, args.r, self.params, precision)
            exact = format_rational(km_transition_exact(args.n, args.m, args.r, self.params))
        else:
            value = km_transition_typeI(args.n, args.m, args.r, self.params, precision)
            exact = None
        return KMDocument(
            self.header(), str(args.type), args.n, args.m, args.r, format_value(value, precision), exact
        )


class SpectrumCommand(Command):
    @override
    @classmethod
    def cli_name(cls):
        return "spectrum"

    @override
    @classmethod
    def help(cls):
        return "Characteristic roots and, for -L >= 80, extrapolated ratio limits of B^(n)(1) and Q^(n)(1)."

    @override
    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser):
        _ = parser.add_argument("--lam", help="Spectral parameter lambda as p/q (default: from configuration).")

    @override
    def run(self, args: argparse.Namespace):
        precision = self.config.precision
        lam = parse_rational(args.lam) if args.lam is not None else self.config.lam_value()
        phi = char_poly(lam, precision)
        root_residual = phi.max_root_residual()
        if root_residual > self.audit_tolerance(max(abs(r) for r in phi.roots) ** 3):
            self.violation = f"characteristic roots leave a residual of {format_value(root_residual)}"
        limits = dict[str, str]()
        ratios = list[RatioRow]()
        if self.config.size >= MIN_RATIO_SIZE:
            for kind in RatioKind:
                estimate = ratio_asymptotics(kind, self.config.size, self.params, precision)
                limits[str(kind)] = format_value(estimate.estimate, precision)
                ratios += [RatioRow(str(kind), k, format_value(v, precision)) for k, v in estimate.samples]
        else:
            logger.info("size %d is too small for ratio extrapolation; reporting roots only", self.config.size)
        return SpectrumDocument(
            self.header(self.config.size),
            format_rational(lam),
            [format_value(r, precision) for r in phi.roots],
            [format_value(r, precision) for r in phi.reciprocal().roots],
            format_value(root_residual, precision),
            limits,
            ratios,
        )


class SteadyCommand(Command):
    @override
    @classmethod
    def cli_name(cls):
        return "steady"

    @override
    @classmethod
    def help(cls):
        return "Steady-state candidate B^(n)(1) Q^(n)(1) with partial sums."

    @override
    def run(self, args: argparse.Namespace):
        L = self.config.size
        precision = self.config.precision
        candidate = steady_candidate(L, self.params, precision)
        with mpmath.workprec(precision):
            residual = left_eigen_residual(candidate.kappa, jp_stochastic_II(L, self.params).to_float_mode())
            if residual > self.audit_tolerance(max(candidate.kappa)):
                self.violation = f"kappa P differs from kappa by {format_value(residual)}"
        rows = [
            SteadyRow(n, format_value(k, precision), format_value(s, precision))
            for n, (k, s) in enumerate(zip(candidate.kappa, candidate.partial_sums))
        ]
        return SteadyDocument(self.header(L), rows, format_value(residual, precision))


class OracleCommand(Command):
    @override
    @classmethod
    def cli_name(cls):
        return "oracle"

    @override
    @classmethod
    def help(cls):
        return "Compare the closed forms with the exact Gauss-Borel factorization of the moment matrix."

    @override
    def run(self, args: argparse.Namespace):
        L = self.config.size
        factors = gauss_borel(build_moment_matrix(L, self.params))
        J_oracle = oracle_jacobi(factors)
        J_closed = jacobi_band(L, self.params)
        mismatches = list[str]()
        for n in J_oracle.valid_rows:
            for m, value in J_oracle.row(n).items():
                if value != J_closed[n, m]:
                    mismatches.append(f"J[{n}][{m}]: oracle {value}, closed form {J_closed[n, m]}")
        for l in range(L):
            if oracle_typeII(factors, l) != stepline_typeII(l, self.params):
                mismatches.append(f"B^({l}) differs")
            if oracle_typeI(factors, l) != typeI_normalized(l + 1, self.params):
                mismatches.append(f"Q^({l}) differs")
            if normalized_norm(factors, l) != norm_H_normalized(l, self.params):
                mismatches.append(f"H_{l} differs")
        for mismatch in mismatches:
            logger.error("oracle mismatch: %s", mismatch)
        return OracleDocument(self.header(L), len(J_oracle.valid_rows), mismatches, f"{len(mismatches)} mismatches")

    @override
    def check(self, document: Document):
        assert isinstance(document, OracleDocument)
        if document.mismatches:
            raise OracleMismatch(document.summary)


COMMANDS = {
    c.cli_name(): c
    for c in [
        CoeffsCommand,
        StochasticCommand,
        SimulateCommand,
        ClassifyCommand,
        KMCommand,
        SpectrumCommand,
        SteadyCommand,
        OracleCommand,
    ]
}


def create_common_parser():
    # SUPPRESS keeps absent flags out of the namespace so configuration values survive
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    _ = common.add_argument("-a", "--alpha", help="alpha as p/q.")
    _ = common.add_argument("-b", "--beta", help="beta as p/q.")
    _ = common.add_argument("-g", "--gamma", help="gamma as p/q.")
    _ = common.add_argument("-L", "--size", type=int, help="Truncation size.")
    _ = common.add_argument("--precision", type=int, help="Working precision in bits (default: 256).")
    _ = common.add_argument("--seed", type=int, help="Random seed (default: 0).")
    _ = common.add_argument("--format", choices=[f.value for f in OutputFormat], help="Output format (default: json).")
    _ = common.add_argument("-o", "--output", type=Path, help="Output file (default: stdout).")
    _ = common.add_argument("--config", type=Path, help="TOML configuration file; flags override its values.")
    _ = common.add_argument("--dump-config", action="store_true", help="Print the effective configuration and exit.")
    _ = common.add_argument("-v", "--verbose", action="count", help="-v for info, -vv for debug logging.")
    return common


def attach_negative_values(argv: list[str]) -> list[str]:
    """Joins "-a -1/4" into "-a=-1/4" so argparse does not take the value for a flag."""
    joined = list[str]()
    for token in argv:
        if joined and joined[-1] in RATIONAL_FLAGS and NEGATIVE_VALUE.fullmatch(token):
            joined[-1] = f"{joined[-1]}={token}"
        else:
            joined.append(token)
    return joined


def create_parser():
    common = create_common_parser()
    parser = argparse.ArgumentParser(
        prog="jpwalks",
        description="Dual random walks from Jacobi-Piñeiro multiple orthogonal polynomials.",
        parents=[common],
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name, command in COMMANDS.items():
        subparser = subparsers.add_parser(name, help=command.help(), parents=[common])
        command.add_arguments(subparser)
    return parser


def configure_logging(verbosity: int):
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def effective_config(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if hasattr(args, "config") else RunConfig()
    for name in ("alpha", "beta", "gamma", "size", "precision"):
        if hasattr(args, name):
            setattr(config, name, getattr(args, name))
    if hasattr(args, "format"):
        config.format = OutputFormat(args.format)
    if hasattr(args, "seed"):
        config.seed = args.seed
        config.simulation = dataclasses.replace(config.simulation, seed=args.seed)
    if hasattr(args, "size") and getattr(args, "command", None) == SimulateCommand.cli_name():
        config.simulation = dataclasses.replace(config.simulation, truncation=args.size)
    config.validate()
    return config


def main(argv: list[str] | None = None) -> int:
    parser = create_parser()
    args = parser.parse_args(attach_negative_values(sys.argv[1:] if argv is None else argv))
    configure_logging(getattr(args, "verbose", 0))
    try:
        config = effective_config(args)
        if getattr(args, "dump_config", False):
            _ = sys.stdout.write(dump_config(config))
            return 0
        if args.command is None:
            parser.print_help(sys.stderr)
            print("No command given. Exiting...", file=sys.stderr)
            return 2
        verdict = positivity_region(config.params())
        if not verdict.ok:
            logger.warning("parameters outside the positivity region: %s", verdict.reason)
        command = COMMANDS[args.command](config)
        document = command.run(args)
        write_document(document, config.format, getattr(args, "output", None))
        command.check(document)
    except JPWalksError as e:
        print(f"{e}. Exiting...", file=sys.stderr)
        return e.exit_code
    return 0
