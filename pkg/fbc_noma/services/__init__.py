from .solver import AllocationSolver, SolverError, PreconditionError, MonotonicityError
from ..models.scenario import ScenarioParams, UserSpec, SolverSettings, Feasible, Infeasible, InfeasibleReason
from .noma import NomaSolver, compose_error, compose_errors
from .tdma import TdmaSolver
from .hybrid import HybridSolver
from .simulation import MonteCarloHarness, apply_sweep, sample_channel, sample_channels, channel_stream, shannon_baseline
