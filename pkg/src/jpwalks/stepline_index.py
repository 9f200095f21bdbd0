"""Step-line ladder: sequence position <-> (weight label, local degree, multi-index)."""

from dataclasses import dataclass
from itertools import accumulate


@dataclass(frozen=True)
class Composition:
    parts: tuple[int, ...]

    def __post_init__(self):
        if len(self.parts) == 0:
            raise ValueError("A composition needs at least one part.")
        for part in self.parts:
            if part < 1:
                raise ValueError(f"Composition part {part} is not positive.")

    @property
    def total(self):
        return sum(self.parts)

    @property
    def p(self):
        return len(self.parts)


STEPLINE = Composition((1, 1))


@dataclass(frozen=True)
class SteplineIndex:
    i: int
    q: int
    a: int
    r: int
    k: int
    nu: tuple[int, ...]


def decompose(i: int, comp: Composition = STEPLINE) -> SteplineIndex:
    if i < 0:
        raise ValueError(f"Index {i} is negative.")
    q, rem = divmod(i, comp.total)
    offsets = [0, *accumulate(comp.parts)]
    # offsets[a-1] <= rem < offsets[a]
    a = next(b for b in range(1, comp.p + 1) if rem < offsets[b])
    r = rem - offsets[a - 1]
    k = q * comp.parts[a - 1] + r
    nu = tuple(
        (q + 1) * n_b if b < a else k if b == a else q * n_b
        for b, n_b in enumerate(comp.parts, start=1)
    )
    return SteplineIndex(i=i, q=q, a=a, r=r, k=k, nu=nu)


def index_of(k: int, a: int, comp: Composition = STEPLINE) -> int:
    if not 1 <= a <= comp.p:
        raise ValueError(f"Weight label {a} is outside 1..{comp.p}.")
    q, r = divmod(k, comp.parts[a - 1])
    return q * comp.total + sum(comp.parts[: a - 1]) + r


def weight_label(l: int) -> int:
    return 1 if l % 2 == 0 else 2


def local_degree(l: int) -> int:
    return l // 2


def stepline_multiindex(l: int, shifted: bool = False) -> tuple[int, int]:
    """nu(l) on the (1,1) ladder; shifted=True gives nu(l+1), where nu(2n) = (n+1, n)."""
    if shifted:
        l += 1
    return ((l + 1) // 2, l // 2)
