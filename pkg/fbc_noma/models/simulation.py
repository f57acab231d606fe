import math
from enum import Enum
from typing import List, Optional
from pydantic import BaseModel, ConfigDict, Field, field_validator
from ..utils.units import db_to_linear, parse_power

class Scheme(str, Enum):
  NOMA = "noma"
  TDMA = "tdma"
  HYBRID = "hybrid"
  SHANNON_NOMA = "shannon-noma"

class SweepAxis(str, Enum):
  """Swept scenario quantity. `max_power` values are in dBm, `packets` is
  the number of aggregated packets per user (bits are multiplied by it).
  """
  D1 = "d1"
  MAX_POWER = "max_power"
  PACKETS = "packets"

class ChannelCondition(str, Enum):
  ALL = "all"
  WEAK_FIRST = "weak-first"
  STRONG_FIRST = "strong-first"

class ChannelModel(BaseModel):
  """Path loss plus Rayleigh fading, normalized by the noise power.

  h = pathloss_scale * distance^-pathloss_exponent * |fade|^2 / noise_power,
  with E|fade|^2 = fading_variance. A zero variance gives a deterministic
  unit fade.
  """
  model_config = ConfigDict(frozen=True)

  distance: float = Field(default=10.0, gt=0.0)
  pathloss_exponent: float = Field(default=2.0, ge=0.0)
  pathloss_scale: float = Field(default=1e-3, gt=0.0)
  noise_power: float = Field(default=1e-14, gt=0.0)
  fading_variance: float = Field(default=1.0, ge=0.0)

  @field_validator("noise_power", mode="before")
  @classmethod
  def _parse_noise_power(cls, value):
    return parse_power(value)

  @property
  def pathloss(self) -> float:
    return self.pathloss_scale * self.distance ** (-self.pathloss_exponent)

  @property
  def mean_gain(self) -> float:
    return self.pathloss / self.noise_power

class ExperimentConfig(BaseModel):
  """Monte-Carlo experiment over channel realizations."""
  model_config = ConfigDict(frozen=True)

  schemes: List[Scheme] = Field(default_factory=lambda: [Scheme.NOMA, Scheme.TDMA, Scheme.HYBRID], min_length=1)
  axis: SweepAxis = SweepAxis.D1
  values: List[float] = Field(min_length=1)
  realizations: int = Field(default=1000, ge=1)
  seed: int = Field(default=0, ge=0)
  condition: ChannelCondition = ChannelCondition.ALL
  channel: ChannelModel = Field(default_factory=ChannelModel)
  # polar-code SNR loss applied to reported energies
  snr_loss_db: float = Field(default=0.0, ge=0.0)
  workers: int = Field(default=1, ge=1)
  block_size: int = Field(default=1000, ge=1)
  keep_records: bool = False

  @property
  def energy_factor(self) -> float:
    return db_to_linear(self.snr_loss_db)

  @property
  def blocks(self) -> int:
    return -(-self.realizations // self.block_size)

class EnergyRow(BaseModel):
  value: float
  scheme: Scheme
  energy: float
  feasible_fraction: float
  seed: int
  feasible: int
  infeasible: int
  draws: int

class InfeasibilityRow(BaseModel):
  value: float
  scheme: Scheme
  probability: float
  std_error: float
  infeasible: int
  draws: int
  seed: int

  @staticmethod
  def from_counts(value: float, scheme: Scheme, infeasible: int, draws: int, seed: int) -> "InfeasibilityRow":
    if draws == 0:
      return InfeasibilityRow(value=value, scheme=scheme, probability=math.nan, std_error=math.nan,
                              infeasible=0, draws=0, seed=seed)
    p = infeasible / draws
    return InfeasibilityRow(value=value, scheme=scheme, probability=p, std_error=math.sqrt(p * (1.0 - p) / draws),
                            infeasible=infeasible, draws=draws, seed=seed)

class RealizationRecord(BaseModel):
  value: float
  index: int
  h1: float
  h2: float
  scheme: Scheme
  energy: float
  feasible: bool

class EnergyTable(BaseModel):
  rows: List[EnergyRow]
  records: Optional[List[RealizationRecord]] = None
