import tomllib
from enum import StrEnum
from fractions import Fraction
from pathlib import Path

from serde import SerdeError, field, serde
from serde.toml import from_toml, to_toml

from jpwalks.errors import InvalidParams
from jpwalks.params import JPParams, parse_rational
from jpwalks.quadrature import KERNEL_TOLERANCE, NODE_CAP
from jpwalks.walk_sim import SimConfig

MIN_SIZE = 4
MIN_PRECISION = 32


class OutputFormat(StrEnum):
    JSON = "json"
    CSV = "csv"


@serde
class QuadratureConfig:
    kernel_tolerance: float = KERNEL_TOLERANCE
    node_cap: int = NODE_CAP


@serde
class RunConfig:
    alpha: str = "-1/4"
    beta: str = "-1/2"
    gamma: str = "-1/2"
    size: int = 12
    precision: int = 256
    max_precision: int = 8192
    seed: int = 0
    format: OutputFormat = OutputFormat.JSON
    lam: str = field(default="1", rename="lambda")
    simulation: SimConfig = field(default_factory=lambda: SimConfig())
    quadrature: QuadratureConfig = field(default_factory=lambda: QuadratureConfig())

    def params(self) -> JPParams:
        return JPParams.from_strings(self.alpha, self.beta, self.gamma)

    def validate(self):
        _ = self.params()
        _ = self.lam_value()
        if self.size < MIN_SIZE:
            raise InvalidParams(f"size {self.size} is below {MIN_SIZE}")
        if not MIN_PRECISION <= self.precision <= self.max_precision:
            raise InvalidParams(
                f"precision {self.precision} must lie between {MIN_PRECISION} and max_precision {self.max_precision}"
            )

    def lam_value(self) -> Fraction:
        value = parse_rational(self.lam)
        if value <= 0:
            raise InvalidParams(f"lambda = {self.lam} must be positive")
        return value


def load_config(path: Path) -> RunConfig:
    try:
        text = path.read_text()
    except OSError as e:
        raise InvalidParams(f'Cannot read configuration "{path}": {e.strerror}')
    try:
        return from_toml(RunConfig, text)
    except (SerdeError, tomllib.TOMLDecodeError) as e:
        raise InvalidParams(f'Invalid configuration "{path}": {e}')


def dump_config(config: RunConfig) -> str:
    return to_toml(config)
