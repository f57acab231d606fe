from enum import Enum
from typing import List, Literal, Optional
from pydantic import BaseModel, Field, model_validator
from .scenario import ScenarioParams, SolverSettings
from .simulation import ExperimentConfig

class Command(str, Enum):
  SOLVE_NOMA = "solve-noma"
  SOLVE_HYBRID = "solve-hybrid"
  SOLVE_TDMA = "solve-tdma"
  MIN_LATENCY = "min-latency"
  FEASIBILITY = "feasibility"
  SWEEP = "sweep"
  MONTE_CARLO = "monte-carlo"
  APPROX_GAP = "approx-gap"

class OutputConfig(BaseModel):
  # stdout when no path is given
  path: Optional[str] = None
  format: Literal["json", "csv"] = "json"

class ApproxGrid(BaseModel):
  blocklengths: List[int] = Field(default_factory=lambda: [100, 300, 640, 2000], min_length=1)
  error_probs: List[float] = Field(default_factory=lambda: [1e-3, 1e-6, 1e-9], min_length=1)

class RunConfig(BaseModel):
  """Resolved command-line run: one command plus the sections it reads.

  `seed`, when set, overrides the experiment seed.
  """
  command: Command
  scenario: Optional[ScenarioParams] = None
  settings: SolverSettings = Field(default_factory=SolverSettings)
  experiment: Optional[ExperimentConfig] = None
  approx: ApproxGrid = Field(default_factory=ApproxGrid)
  output: OutputConfig = Field(default_factory=OutputConfig)
  seed: Optional[int] = Field(default=None, ge=0)
  metric: Literal["energy", "infeasibility"] = "energy"
  exhaustive: bool = False

  @model_validator(mode="after")
  def _check_sections(self):
    if self.command != Command.APPROX_GAP and self.scenario is None:
      raise ValueError(f"Invalid config: command {self.command.value} needs a scenario")
    if self.command in (Command.SWEEP, Command.MONTE_CARLO) and self.experiment is None:
      raise ValueError(f"Invalid config: command {self.command.value} needs an experiment")
    if self.seed is not None and self.experiment is not None and self.experiment.seed != self.seed:
      self.experiment = self.experiment.model_copy(update={"seed": self.seed})
    return self
