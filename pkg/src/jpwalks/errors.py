from typing import ClassVar


class JPWalksError(Exception):
    exit_code: ClassVar[int] = 1


class InvalidParams(JPWalksError):
    exit_code: ClassVar[int] = 2


class ResonantParams(InvalidParams):
    def __init__(self, alpha: object, beta: object):
        super().__init__(f"resonant parameters: alpha - beta = {alpha} - {beta} is an integer")


class PrecisionLoss(JPWalksError):
    exit_code: ClassVar[int] = 3

    def __init__(self, what: str, lost_bits: float, precision: int):
        super().__init__(
            f"{what} lost {lost_bits:.0f} of {precision} bits to cancellation"
        )
        self.lost_bits = lost_bits
        self.precision = precision


class InvariantViolation(JPWalksError):
    exit_code: ClassVar[int] = 4


class SingularMinor(InvariantViolation):
    def __init__(self, l: int):
        super().__init__(f"leading principal minor {l} of the moment matrix vanishes")
        self.l = l


class NonpositiveValue(InvariantViolation):
    def __init__(self, n: int, value: object):
        super().__init__(f"scaling value {n} is not positive ({value})")
        self.n = n


class NegativeEntry(InvariantViolation):
    def __init__(self, n: int, m: int, value: object):
        super().__init__(f"entry ({n}, {m}) is negative ({value})")
        self.n = n
        self.m = m


class ZeroDenominator(InvariantViolation):
    def __init__(self, n: int):
        super().__init__(f"scaling recursion hit a zero denominator at row {n}")
        self.n = n


class ModeMismatch(InvariantViolation):
    pass


class InexactDivision(InvariantViolation):
    def __init__(self, root: object, remainder: object):
        super().__init__(f"division by the factor at {root} leaves remainder {remainder}")
        self.remainder = remainder


class OracleMismatch(InvariantViolation):
    pass


class NumericalFailure(JPWalksError):
    exit_code: ClassVar[int] = 4


class ConvergenceFailure(NumericalFailure):
    pass


class SlowConvergence(NumericalFailure):
    def __init__(self, what: str, partial: object, bound: object):
        super().__init__(f"{what} did not settle; last value {partial}, change {bound}")
        self.partial = partial
        self.bound = bound


class NoConvergence(NumericalFailure):
    pass


class NonTerminating(NumericalFailure):
    pass


class InsufficientData(NumericalFailure):
    pass
