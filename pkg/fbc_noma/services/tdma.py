import logging
from typing import Dict

import numpy as np

from ..models.scenario import InfeasibleReason, ScenarioParams, TdmaAllocation
from ..utils.fbc import sinr_table
from .solver import AllocationSolver


class TdmaSolver(AllocationSolver):
  """
  Two orthogonal slots: user 1 takes m1 symbols, user 2 the remaining
  D2 - m1. Each slot is capped at P_max on its own.
  """

  def solve(self, params: ScenarioParams):
    return self.tdma_solver(params)

  def split_range(self, params: ScenarioParams) -> np.ndarray:
    """Admissible user-1 slot lengths m1 in [m_min, min(D1, D2 - m_min)]."""
    m_min = params.min_blocklength
    top = min(params.user1.deadline, params.user2.deadline - m_min)
    return np.arange(m_min, top + 1) if top >= m_min else np.arange(0)

  def tdma_solver(self, params: ScenarioParams):
    """Scan the user-1 slot length and keep the cheapest feasible split.

    Args:
        params (ScenarioParams): The scenario.

    Returns:
        SolveResult: The minimum-energy split, or Infeasible. Energy ties go
        to the shortest user-1 slot.
    """
    self.check_monotonicity(params)
    u1, u2 = params.user1, params.user2
    m1 = self.split_range(params)
    if m1.size == 0:
      return self.infeasible(InfeasibleReason.NO_FEASIBLE_POINT,
                             f"D2={u2.deadline} leaves no room for two slots of {params.min_blocklength} symbols")
    m2 = u2.deadline - m1
    tol = self.settings.sinr_tol
    gamma1 = sinr_table(u1.bits, m1, u1.error_prob, tol=tol, upper=self.sinr_cap(u1, params))
    gamma2 = sinr_table(u2.bits, m2, u2.error_prob, tol=tol, upper=self.sinr_cap(u2, params))
    p1, p2 = gamma1 / u1.gain, gamma2 / u2.gain
    ok = (p1 <= params.max_power) & (p2 <= params.max_power)
    if not np.any(ok):
      return self.infeasible(InfeasibleReason.POWER_BUDGET, "no slot split fits the power budget")
    energy = np.where(ok, m1 * p1 + m2 * p2, np.inf)
    k = int(np.argmin(energy))
    logging.debug(f"TDMA split m1={m1[k]}, m2={m2[k]}, energy {energy[k]}")
    return self.feasible(TdmaAllocation(m1=int(m1[k]), m2=int(m2[k]), gamma1=float(gamma1[k]), gamma2=float(gamma2[k]),
                                        p1=float(p1[k]), p2=float(p2[k]), energy=float(energy[k]),
                                        error_probs=(u1.error_prob, u2.error_prob)))

  def rate_residuals(self, allocation: TdmaAllocation, params: ScenarioParams) -> Dict[str, float]:
    u1, u2 = params.user1, params.user2
    return {"user1": self.residual(u1.bits, allocation.m1, allocation.gamma1, u1.error_prob, params),
            "user2": self.residual(u2.bits, allocation.m2, allocation.gamma2, u2.error_prob, params)}

  def feasible_mask(self, params: ScenarioParams, h1: np.ndarray, h2: np.ndarray) -> np.ndarray:
    """Vectorized TDMA feasibility over channel draws.

    A split m1 works when h1 >= G1(m1)/P_max and h2 >= G2(D2 - m1)/P_max. The
    first threshold falls with m1 and the second rises, so the shortest slot
    that serves user 1 is the only one to test for user 2.
    """
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    m1 = self.split_range(params)
    if m1.size == 0 or params.max_power <= 0.0:
      return np.zeros(h1.shape, dtype=bool)
    u1, u2 = params.user1, params.user2
    tol = self.settings.sinr_tol
    need1 = sinr_table(u1.bits, m1, u1.error_prob, tol=tol) / params.max_power
    need2 = sinr_table(u2.bits, u2.deadline - m1, u2.error_prob, tol=tol) / params.max_power
    first = np.searchsorted(-need1, -h1, side="left")
    served = first < m1.size
    return served & (need2[np.minimum(first, m1.size - 1)] <= h2)
