import math
from enum import Enum
from typing import Annotated, Literal, Optional, Tuple, Union
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from .fbc import FbcParams
from ..utils.search import GOLDEN_RATIO
from ..utils.units import parse_power

NomaScheme = Literal["CaseI", "CaseII-FullBlock", "CaseII-ShortBlock"]

class UserSpec(BaseModel):
  """Demand and channel of one receiver."""
  model_config = ConfigDict(frozen=True)

  bits: int = Field(ge=1)
  deadline: int = Field(ge=1)
  error_prob: float = Field(gt=0.0, le=0.5)
  gain: float = Field(gt=0.0)

  def fbc(self, min_blocklength: int, bits: Optional[int] = None, error_prob: Optional[float] = None) -> FbcParams:
    """Build the kernel parameters of this user's codeword, or of a part of it."""
    return FbcParams(bits=self.bits if bits is None else bits,
                     error_prob=self.error_prob if error_prob is None else error_prob,
                     min_blocklength=min_blocklength)

class ScenarioParams(BaseModel):
  """One two-user optimization instance.

  `max_power` is in watts; strings with a "W" or "dBm" suffix are converted
  on validation. `split_error_probs` is the (eps21, eps22) budget of the
  hybrid scheme and defaults to half of user 2's target for each part.
  """
  model_config = ConfigDict(frozen=True)

  user1: UserSpec
  user2: UserSpec
  max_power: float = Field(ge=0.0)
  min_blocklength: int = Field(default=100, ge=1)
  split_error_probs: Optional[Tuple[float, float]] = None

  @field_validator("max_power", mode="before")
  @classmethod
  def _parse_max_power(cls, value):
    return parse_power(value)

  @model_validator(mode="after")
  def _check_deadlines(self):
    if self.user1.deadline > self.user2.deadline:
      raise ValueError(f"Invalid deadlines: D1={self.user1.deadline} exceeds D2={self.user2.deadline}")
    if self.min_blocklength > self.user1.deadline:
      raise ValueError(f"Invalid minimum blocklength: {self.min_blocklength} exceeds D1={self.user1.deadline}")
    if self.split_error_probs is not None:
      for eps in self.split_error_probs:
        if not 0.0 < eps <= 0.5:
          raise ValueError(f"Invalid split error probability: {eps}")
    return self

  @property
  def eps21(self) -> float:
    if self.split_error_probs is None:
      return self.user2.error_prob / 2.0
    return self.split_error_probs[0]

  @property
  def eps22(self) -> float:
    if self.split_error_probs is None:
      return self.user2.error_prob / 2.0
    return self.split_error_probs[1]

  @property
  def weak_first(self) -> bool:
    """True when user 1 has the weaker (or equal) channel, i.e. Case I."""
    return self.user1.gain <= self.user2.gain

  def with_gains(self, h1: float, h2: float) -> "ScenarioParams":
    return self.model_copy(update={"user1": self.user1.model_copy(update={"gain": float(h1)}),
                                   "user2": self.user2.model_copy(update={"gain": float(h2)})})

  def with_error_probs(self, eps: float) -> "ScenarioParams":
    return self.model_copy(update={"user1": self.user1.model_copy(update={"error_prob": eps}),
                                   "user2": self.user2.model_copy(update={"error_prob": eps}),
                                   "split_error_probs": (eps, eps)})

class SolverSettings(BaseModel):
  """Tolerances shared by all solvers."""
  model_config = ConfigDict(frozen=True)

  sinr_tol: float = Field(default=1e-9, gt=0.0)
  sinr_margin: float = Field(default=1.0, gt=0.0)
  golden_ratio: float = Field(default=GOLDEN_RATIO, gt=0.5, lt=1.0)
  golden_tol: float = Field(default=0.5, gt=0.0)
  latency_cap: int = Field(default=1_000_000, ge=1)

class InfeasibleReason(str, Enum):
  POWER_BUDGET = "power-budget"
  SINR_PRODUCT = "sinr-product"
  NO_FEASIBLE_POINT = "no-feasible-point"
  LATENCY_CAP = "latency-cap"

class NomaAllocation(BaseModel):
  kind: Literal["noma"] = "noma"
  scheme: NomaScheme
  m1: int
  m2: int
  gamma1: float
  gamma2: float
  p1: float
  p2: float
  energy: float
  error_probs: Tuple[float, float]

class TdmaAllocation(BaseModel):
  kind: Literal["tdma"] = "tdma"
  m1: int
  m2: int
  gamma1: float
  gamma2: float
  p1: float
  p2: float
  energy: float
  error_probs: Tuple[float, float]

class HybridAllocation(BaseModel):
  """Split-packet allocation: user 2 sends n21 bits superposed on user 1
  and n22 bits in its own slot. `noma_scheme` is set when the pure NOMA
  endpoint (n22 = 0) won.
  """
  kind: Literal["hybrid"] = "hybrid"
  case: Literal["I", "II"]
  n21: int
  n22: int
  m1: int
  m21: int
  m22: int
  gamma1: float
  gamma21: float
  gamma22: float
  p1: float
  p21: float
  p22: float
  energy: float
  error_probs: Tuple[float, float]
  noma_scheme: Optional[NomaScheme] = None

Allocation = Annotated[Union[NomaAllocation, TdmaAllocation, HybridAllocation], Field(discriminator="kind")]

class Feasible(BaseModel):
  status: Literal["feasible"] = "feasible"
  allocation: Allocation

  @property
  def feasible(self) -> bool:
    return True

  @property
  def energy(self) -> float:
    return self.allocation.energy

class Infeasible(BaseModel):
  status: Literal["infeasible"] = "infeasible"
  reason: InfeasibleReason
  detail: Optional[str] = None

  @property
  def feasible(self) -> bool:
    return False

  @property
  def energy(self) -> float:
    return math.inf

SolveResult = Annotated[Union[Feasible, Infeasible], Field(discriminator="status")]
