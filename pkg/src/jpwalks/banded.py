from collections.abc import Callable
from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction

import mpmath
import numpy as np
from numpy.typing import NDArray

from jpwalks.errors import ModeMismatch
from jpwalks.params import to_mpf

type Scalar = Fraction | mpmath.mpf
type Float64Array[T: tuple[int, ...]] = np.ndarray[T, np.dtype[np.float64]]


class Profile(StrEnum):
    TYPE_II = "type_ii"  # N lower diagonals, 1 upper
    TYPE_I = "type_i"  # 1 lower diagonal, N upper


class ValueMode(StrEnum):
    RATIONAL = "rational"
    FLOAT = "float"


def mode_of(value: object) -> ValueMode:
    if isinstance(value, Fraction | int):
        return ValueMode.RATIONAL
    if isinstance(value, mpmath.mpf):
        return ValueMode.FLOAT
    raise ModeMismatch(f"Value {value!r} is neither an exact rational nor a high-precision float.")


def common_mode(*groups: object) -> ValueMode:
    """Single value mode shared by all inputs; mixing exact and float values is refused."""
    modes = set[ValueMode]()
    for group in groups:
        items = group if isinstance(group, list | tuple) else [group]
        modes.update(mode_of(v) for v in items)
    if len(modes) != 1:
        raise ModeMismatch(f"Inputs mix value modes {sorted(modes)}.")
    return modes.pop()


@dataclass
class BandedOperator:
    """Truncated band matrix. Row n stores columns n-lower_bw .. n+upper_bw, including
    columns at or beyond `size` so that boundary rows keep their full band."""

    size: int
    lower_bw: int
    upper_bw: int
    mode: ValueMode
    profile: Profile
    bands: list[list[Scalar]] = field(repr=False)
    # trailing rows whose band data reaches past what the producer could compute
    provisional: int = 0

    @classmethod
    def zeros(
        cls,
        size: int,
        lower_bw: int,
        upper_bw: int,
        mode: ValueMode,
        profile: Profile,
        provisional: int = 0,
    ):
        zero = Fraction(0) if mode == ValueMode.RATIONAL else mpmath.mpf(0)
        bands = [[zero] * (lower_bw + upper_bw + 1) for _ in range(size)]
        return cls(size, lower_bw, upper_bw, mode, profile, bands, provisional)

    def in_band(self, n: int, m: int):
        return 0 <= n < self.size and m >= 0 and -self.lower_bw <= m - n <= self.upper_bw

    def __getitem__(self, key: tuple[int, int]) -> Scalar:
        n, m = key
        if not self.in_band(n, m):
            return Fraction(0) if self.mode == ValueMode.RATIONAL else mpmath.mpf(0)
        return self.bands[n][m - n + self.lower_bw]

    def __setitem__(self, key: tuple[int, int], value: Scalar):
        n, m = key
        if not self.in_band(n, m):
            raise IndexError(f"Entry ({n}, {m}) lies outside the band.")
        if mode_of(value) != self.mode:
            raise ModeMismatch(f"Cannot store a {mode_of(value)} value in a {self.mode} operator.")
        self.bands[n][m - n + self.lower_bw] = value

    def row(self, n: int) -> dict[int, Scalar]:
        return {
            m: self[n, m]
            for m in range(max(0, n - self.lower_bw), n + self.upper_bw + 1)
        }

    def row_sum(self, n: int) -> Scalar:
        zero = Fraction(0) if self.mode == ValueMode.RATIONAL else mpmath.mpf(0)
        return sum(self.row(n).values(), zero)

    @property
    def valid_rows(self):
        return range(self.size - self.provisional)

    def row_sum_residual(self) -> Scalar:
        """Largest |row sum - 1| over the valid rows."""
        one = Fraction(1) if self.mode == ValueMode.RATIONAL else mpmath.mpf(1)
        return max((abs(self.row_sum(n) - one) for n in self.valid_rows), default=one - one)

    def max_row_sum(self) -> Scalar:
        return max(sum(abs(v) for v in self.row(n).values()) for n in range(self.size))

    def is_nonnegative(self):
        return all(v >= 0 for row in self.bands for v in row)

    def map(self, f: Callable[[int, int, Scalar], Scalar], mode: ValueMode | None = None):
        out = BandedOperator.zeros(
            self.size, self.lower_bw, self.upper_bw, mode or self.mode, self.profile, self.provisional
        )
        for n in range(self.size):
            for m, v in self.row(n).items():
                out[n, m] = f(n, m, v)
        return out

    def to_float_mode(self):
        if self.mode == ValueMode.FLOAT:
            return self
        return self.map(lambda n, m, v: to_mpf(v), ValueMode.FLOAT)

    def transpose(self, size: int | None = None):
        """Transposed operator on the leading `size` rows; needs size + lower_bw source rows."""
        size = self.size - self.lower_bw if size is None else size
        profile = Profile.TYPE_I if self.profile == Profile.TYPE_II else Profile.TYPE_II
        out = BandedOperator.zeros(size, self.upper_bw, self.lower_bw, self.mode, profile)
        for n in range(size):
            for m in range(max(0, n - self.upper_bw), n + self.lower_bw + 1):
                out[n, m] = self[m, n]
        return out

    def to_dense(self, columns: int | None = None) -> Float64Array[tuple[int, int]]:
        columns = self.size if columns is None else columns
        dense = np.zeros((self.size, columns), dtype=np.float64)
        for n in range(self.size):
            for m, v in self.row(n).items():
                if m < columns:
                    dense[n, m] = float(v)
        return dense

    def to_exact_rows(self, columns: int | None = None) -> list[list[Fraction]]:
        if self.mode != ValueMode.RATIONAL:
            raise ModeMismatch("Exact rows need a rational operator.")
        columns = self.size if columns is None else columns
        rows = [[Fraction(0)] * columns for _ in range(self.size)]
        for n in range(self.size):
            for m, v in self.row(n).items():
                if m < columns:
                    rows[n][m] = Fraction(v)
        return rows


def dense_power(matrix: NDArray[np.float64], r: int) -> Float64Array[tuple[int, int]]:
    return np.linalg.matrix_power(matrix, r)
