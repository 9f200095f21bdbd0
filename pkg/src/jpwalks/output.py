"""Self-describing result documents, written as JSON or CSV."""

import io
import sys
from abc import ABC, abstractmethod
from fractions import Fraction
from pathlib import Path
from typing import override

import mpmath
import numpy as np
from serde import field, serde
from serde.json import to_json

from jpwalks import __version__
from jpwalks.banded import BandedOperator
from jpwalks.config import OutputFormat
from jpwalks.params import JPParams, format_rational
from jpwalks.walk_sim import WalkStats

TOOL = "jpwalks"

type Table = tuple[list[str], list[list[str]]]


def format_value(value: object, precision: int = 256) -> str:
    match value:
        case Fraction() | int():
            return format_rational(Fraction(value))
        case mpmath.mpf() | mpmath.mpc():
            return mpmath.nstr(value, max(15, int(precision * 0.30103)))
        case _:
            return str(value)


@serde
class Header:
    tool: str
    version: str
    command: str
    params: dict[str, str]
    precision: int
    truncation: int | None = field(default=None)
    seed: int | None = field(default=None)

    @staticmethod
    def create(command: str, params: JPParams, precision: int, truncation: int | None = None, seed: int | None = None):
        return Header(TOOL, __version__, command, params.as_strings(), precision, truncation, seed)

    def lines(self):
        yield f"tool: {self.tool} {self.version}"
        yield f"command: {self.command}"
        for name, value in self.params.items():
            yield f"{name}: {value}"
        yield f"precision: {self.precision}"
        if self.truncation is not None:
            yield f"truncation: {self.truncation}"
        if self.seed is not None:
            yield f"seed: {self.seed}"


class Document(ABC):
    header: Header

    @abstractmethod
    def table(self) -> Table: ...


def write_document(document: Document, fmt: OutputFormat, output: Path | None = None):
    match fmt:
        case OutputFormat.JSON:
            text = to_json(document) + "\n"
        case OutputFormat.CSV:
            columns, rows = document.table()
            buffer = io.StringIO()
            np.savetxt(
                buffer,
                np.array(rows, dtype=str).reshape(len(rows), len(columns)),
                fmt="%s",
                delimiter=",",
                header="\n".join([*document.header.lines(), ",".join(columns)]),
                comments="# ",
            )
            text = buffer.getvalue()
    if output is None:
        _ = sys.stdout.write(text)
    else:
        _ = output.write_text(text)


@serde
class CoeffRow:
    n: int
    b_even: str
    b_odd: str
    c_even: str
    c_odd: str
    d_even: str
    d_odd: str


@serde
class CoeffsDocument(Document):
    header: Header
    rows: list[CoeffRow]
    limits: list[str] | None = field(default=None)

    @override
    def table(self) -> Table:
        columns = ["n", "b_nn", "b_n1n", "c_n1n1", "c_n1n", "d_n1n1", "d_n2n1"]
        rows = [[str(r.n), r.b_even, r.b_odd, r.c_even, r.c_odd, r.d_even, r.d_odd] for r in self.rows]
        if self.limits is not None:
            b, c, d = self.limits
            rows.append(["limit", b, b, c, c, d, d])
        return columns, rows


@serde
class MatrixEntry:
    j: int
    v: str


@serde
class MatrixDocument(Document):
    header: Header
    size: int
    lower_bw: int
    upper_bw: int
    mode: str
    profile: str
    rows: list[list[MatrixEntry]]
    max_row_sum_error: str

    @staticmethod
    def create(header: Header, P: BandedOperator):
        rows = [
            [MatrixEntry(m, format_value(v, header.precision)) for m, v in P.row(n).items()]
            for n in range(P.size)
        ]
        return MatrixDocument(
            header,
            P.size,
            P.lower_bw,
            P.upper_bw,
            str(P.mode),
            str(P.profile),
            rows,
            format_value(P.row_sum_residual(), header.precision),
        )

    @override
    def table(self) -> Table:
        columns = ["row", "column", "value"]
        return columns, [[str(n), str(e.j), e.v] for n, row in enumerate(self.rows) for e in row]


@serde
class StatsDocument(Document):
    header: Header
    boundary: str
    stats: WalkStats

    @override
    def table(self) -> Table:
        columns = ["start", "to", "step", "count"]
        return columns, [[str(c.start), str(c.to), str(c.step), str(c.count)] for c in self.stats.transition_counts]


@serde
class CurveDocument(Document):
    header: Header
    columns: list[str]
    points: list[list[str]]

    @override
    def table(self) -> Table:
        return self.columns, self.points


@serde
class DiagnosticPoint:
    nodes_or_epsilon: str
    value: str


@serde
class ClassifyDocument(Document):
    header: Header
    verdict: str
    reason: str
    quadrature_sums: list[DiagnosticPoint]
    truncated_integrals: list[DiagnosticPoint]
    stabilized: bool

    @override
    def table(self) -> Table:
        rows = [["quadrature", p.nodes_or_epsilon, p.value] for p in self.quadrature_sums]
        rows += [["truncated", p.nodes_or_epsilon, p.value] for p in self.truncated_integrals]
        rows.append(["verdict", self.verdict, str(self.stabilized)])
        return ["kind", "nodes_or_epsilon", "value"], rows


@serde
class KMDocument(Document):
    header: Header
    chain: str
    n: int
    m: int
    r: int
    probability: str
    exact: str | None = field(default=None)

    @override
    def table(self) -> Table:
        columns = ["chain", "n", "m", "r", "probability", "exact"]
        return columns, [[self.chain, str(self.n), str(self.m), str(self.r), self.probability, self.exact or ""]]


@serde
class RatioRow:
    kind: str
    k: int
    ratio: str


@serde
class SpectrumDocument(Document):
    header: Header
    lam: str
    roots: list[str]
    reciprocal_roots: list[str]
    root_residual: str
    ratio_limits: dict[str, str]
    ratios: list[RatioRow]

    @override
    def table(self) -> Table:
        return ["kind", "k", "ratio"], [[r.kind, str(r.k), r.ratio] for r in self.ratios]


@serde
class SteadyRow:
    n: int
    kappa: str
    partial_sum: str


@serde
class SteadyDocument(Document):
    header: Header
    rows: list[SteadyRow]
    left_eigen_residual: str

    @override
    def table(self) -> Table:
        return ["n", "kappa", "partial_sum"], [[str(r.n), r.kappa, r.partial_sum] for r in self.rows]


@serde
class OracleDocument(Document):
    header: Header
    compared_rows: int
    mismatches: list[str]
    summary: str

    @override
    def table(self) -> Table:
        return ["mismatch"], [[m] for m in self.mismatches] or [[self.summary]]
