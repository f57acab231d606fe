import functools
import logging
from typing import Dict, Optional

from ..models.scenario import (Feasible, Infeasible, InfeasibleReason, ScenarioParams,
                               SolverSettings, UserSpec)
from ..models.fbc import FbcParams
from ..utils.fbc import fbc_residual, monotonicity_holds, sinr_for_blocklength


class SolverError(Exception):
  """Exception raised when a solver cannot be applied to a scenario."""


class PreconditionError(SolverError):
  """Exception raised when the scenario's channel ordering does not match the solved case."""


class MonotonicityError(SolverError):
  """Exception raised when a user's demand breaks energy monotonicity in the blocklength."""


@functools.lru_cache(maxsize=65536)
def _exact_sinr(bits: int, m: int, error_prob: float, min_blocklength: int, upper: float, tol: float) -> float:
  params = FbcParams(bits=bits, error_prob=error_prob, min_blocklength=min_blocklength)
  return sinr_for_blocklength(float(m), params, tol=tol, upper=upper)


class AllocationSolver:
  """
  Base class of the two-user downlink allocation solvers. A solver turns a
  ScenarioParams into a SolveResult; infeasibility is a result, not an error.
  """

  def __init__(self, settings: Optional[SolverSettings] = None):
    """Initialize the solver.

    Args:
        settings (SolverSettings, optional): Tolerances. Defaults to SolverSettings().
    """
    self.settings = settings or SolverSettings()

  def solve(self, params: ScenarioParams):
    """Solve the energy minimization problem of this scheme.

    Args:
        params (ScenarioParams): The scenario to solve.

    Returns:
        SolveResult: Feasible allocation or Infeasible reason.
    """
    pass

  def rate_residuals(self, allocation, params: ScenarioParams) -> Dict[str, float]:
    """Rate-constraint residuals of an allocation, one per codeword.

    Args:
        allocation: The allocation returned by this solver.
        params (ScenarioParams): The solved scenario.

    Returns:
        Dict[str, float]: Residual per codeword, zero within tolerance.
    """
    pass

  def check_monotonicity(self, params: ScenarioParams):
    """Refuse scenarios whose users break the energy monotonicity condition.

    Raises:
        MonotonicityError: If either user fails the condition.
    """
    for name, user in (("user1", params.user1), ("user2", params.user2)):
      if not monotonicity_holds(user.fbc(params.min_blocklength)):
        logging.warning(f"Refusing scenario: {name} with N={user.bits}, eps={user.error_prob} breaks energy monotonicity")
        raise MonotonicityError(f"Invalid {name}: N={user.bits}, eps={user.error_prob} breaks energy monotonicity")

  def sinr_cap(self, user: UserSpec, params: ScenarioParams) -> float:
    """Bisection bracket top P_max*h + delta for a user's SINR."""
    return params.max_power * user.gain + self.settings.sinr_margin

  def sinr(self, bits: int, m: int, error_prob: float, user: UserSpec, params: ScenarioParams) -> float:
    """Exact SINR for `bits` bits in m symbols on the user's channel, 0 for no bits.

    Raises:
        UnboundedSinrError: If the demand needs an SINR above the user's cap.
    """
    if bits <= 0:
      return 0.0
    return _exact_sinr(int(bits), int(m), float(error_prob), params.min_blocklength,
                       self.sinr_cap(user, params), self.settings.sinr_tol)

  def residual(self, bits: int, m: int, gamma: float, error_prob: float, params: ScenarioParams) -> float:
    if bits <= 0:
      return 0.0
    return fbc_residual(m, gamma, FbcParams(bits=bits, error_prob=error_prob, min_blocklength=params.min_blocklength))

  def infeasible(self, reason: InfeasibleReason, detail: Optional[str] = None) -> Infeasible:
    logging.debug(f"{type(self).__name__}: infeasible ({reason.value}) {detail or ''}")
    return Infeasible(reason=reason, detail=detail)

  def feasible(self, allocation) -> Feasible:
    return Feasible(allocation=allocation)
