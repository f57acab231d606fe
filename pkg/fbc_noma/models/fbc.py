from typing import Optional
from pydantic import BaseModel, ConfigDict, Field

class FbcParams(BaseModel):
  """Codeword demand of one finite-blocklength link."""
  model_config = ConfigDict(frozen=True)

  bits: int = Field(ge=1)
  # 0.5 is the Shannon degenerate case (zero dispersion penalty)
  error_prob: float = Field(gt=0.0, le=0.5)
  min_blocklength: int = Field(default=100, ge=1)

class RatePoint(BaseModel):
  sinr: float = Field(ge=0.0)
  blocklength: float
  rate: float

class ApproxContext(BaseModel):
  """Breakpoints of the rate-vs-SINR curve for one dispersion scale.

  Rates are in nats. `x_mid`, `f_mid`, `slope_mid` and `x_zero` are only
  set when the curve has a convex segment (a <= beta).
  """
  model_config = ConfigDict(frozen=True)

  a: float = Field(ge=0.0)
  beta: float
  x0: float
  x_lo: float
  x_mid: Optional[float] = None
  f_mid: Optional[float] = None
  slope_mid: Optional[float] = None
  x_zero: Optional[float] = None

  @property
  def has_convex_segment(self) -> bool:
    return self.x_mid is not None
