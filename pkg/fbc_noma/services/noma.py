import functools
import logging
from typing import Dict, Optional, Tuple

import numpy as np

from ..models.scenario import (InfeasibleReason, NomaAllocation, ScenarioParams)
from ..utils.fbc import UnboundedSinrError, sinr_table
from ..utils.search import bisect_integer
from .solver import AllocationSolver, PreconditionError


def compose_error(eps_a: float, eps_b: float) -> float:
  """Error probability of two decoding steps in series, eps_a + eps_b - eps_a*eps_b.

  Raises:
      ValueError: If a probability is outside [0, 1].
  """
  for eps in (eps_a, eps_b):
    if not 0.0 <= eps <= 1.0:
      raise ValueError(f"Invalid error probability: {eps}")
  return eps_a + eps_b - eps_a * eps_b


def compose_errors(*probs: float) -> float:
  """Fold compose_error over any number of decoding steps."""
  return functools.reduce(compose_error, probs, 0.0)


class NomaSolver(AllocationSolver):
  """
  Globally optimal pure-NOMA allocation. With h1 <= h2 (Case I) user 2
  decodes and cancels user 1's codeword; with h1 > h2 (Case II) either both
  receivers treat interference as noise over their full deadlines, or user
  1 cancels user 2's codeword and both codewords end at D1.
  """

  def solve(self, params: ScenarioParams):
    return self.solve_noma(params)

  def _case1_sinrs(self, params: ScenarioParams) -> Tuple[float, float]:
    u1, u2 = params.user1, params.user2
    gamma1 = self.sinr(u1.bits, u1.deadline, u1.error_prob, u1, params)
    gamma2 = self.sinr(u2.bits, u2.deadline, u2.error_prob, u2, params)
    return gamma1, gamma2

  def _require_weak_first(self, params: ScenarioParams):
    if not params.weak_first:
      raise PreconditionError(f"Invalid channel ordering: Case I needs h1 <= h2, got h1={params.user1.gain}, h2={params.user2.gain}")

  def _require_strong_first(self, params: ScenarioParams):
    if params.weak_first:
      raise PreconditionError(f"Invalid channel ordering: Case II needs h1 > h2, got h1={params.user1.gain}, h2={params.user2.gain}")

  def feasibility_case1(self, params: ScenarioParams) -> bool:
    """Check the Case I power budget at the deadlines.

    Args:
        params (ScenarioParams): A Case I scenario (h1 <= h2).

    Returns:
        bool: True if G1*G2/h2 + G1/h1 + G2/h2 <= P_max.
    """
    self._require_weak_first(params)
    h1, h2 = params.user1.gain, params.user2.gain
    try:
      gamma1, gamma2 = self._case1_sinrs(params)
    except UnboundedSinrError:
      return False
    return gamma1 * gamma2 / h2 + gamma1 / h1 + gamma2 / h2 <= params.max_power

  def solve_case1(self, params: ScenarioParams):
    """Solve Case I (h1 <= h2): both codewords span their deadlines.

    Args:
        params (ScenarioParams): The scenario.

    Returns:
        SolveResult: The optimal allocation, or Infeasible(power-budget).

    Raises:
        PreconditionError: If h1 > h2.
        MonotonicityError: If a user breaks energy monotonicity.
    """
    self._require_weak_first(params)
    self.check_monotonicity(params)
    u1, u2 = params.user1, params.user2
    try:
      gamma1, gamma2 = self._case1_sinrs(params)
    except UnboundedSinrError as e:
      return self.infeasible(InfeasibleReason.POWER_BUDGET, str(e))
    p1 = gamma1 * gamma2 / u2.gain + gamma1 / u1.gain
    p2 = gamma2 / u2.gain
    if p1 + p2 > params.max_power:
      return self.infeasible(InfeasibleReason.POWER_BUDGET, f"p1+p2={p1 + p2} exceeds {params.max_power}")
    m1, m2 = u1.deadline, u2.deadline
    return self.feasible(NomaAllocation(scheme="CaseI", m1=m1, m2=m2, gamma1=gamma1, gamma2=gamma2,
                                        p1=p1, p2=p2, energy=m1 * p1 + m2 * p2,
                                        error_probs=(u1.error_prob, compose_error(u1.error_prob, u2.error_prob))))

  def solve_case2_full(self, params: ScenarioParams):
    """Solve Case II (h1 > h2) with both receivers treating interference as noise.

    Returns:
        SolveResult: The allocation at (D1, D2), or Infeasible(sinr-product)
        when G1*G2 >= 1, or Infeasible(power-budget).
    """
    self._require_strong_first(params)
    self.check_monotonicity(params)
    u1, u2 = params.user1, params.user2
    h1, h2 = u1.gain, u2.gain
    try:
      gamma1 = self.sinr(u1.bits, u1.deadline, u1.error_prob, u1, params)
      gamma2 = self.sinr(u2.bits, u2.deadline, u2.error_prob, u2, params)
    except UnboundedSinrError as e:
      return self.infeasible(InfeasibleReason.POWER_BUDGET, str(e))
    product = gamma1 * gamma2
    if product >= 1.0:
      return self.infeasible(InfeasibleReason.SINR_PRODUCT, f"gamma1*gamma2={product}")
    denominator = h1 * h2 * (1.0 - product)
    p1 = (gamma1 * h2 + product * h1) / denominator
    p2 = (gamma2 * h1 + product * h2) / denominator
    if p1 + p2 > params.max_power:
      return self.infeasible(InfeasibleReason.POWER_BUDGET, f"p1+p2={p1 + p2} exceeds {params.max_power}")
    m1, m2 = u1.deadline, u2.deadline
    return self.feasible(NomaAllocation(scheme="CaseII-FullBlock", m1=m1, m2=m2, gamma1=gamma1, gamma2=gamma2,
                                        p1=p1, p2=p2, energy=m1 * p1 + m2 * p2,
                                        error_probs=(u1.error_prob, u2.error_prob)))

  def solve_case2_sic(self, params: ScenarioParams):
    """Solve Case II (h1 > h2) with user 1 cancelling user 2's codeword.

    Both codewords end at D1.
    """
    self._require_strong_first(params)
    self.check_monotonicity(params)
    u1, u2 = params.user1, params.user2
    m = u1.deadline
    try:
      gamma1 = self.sinr(u1.bits, m, u1.error_prob, u1, params)
      gamma2 = self.sinr(u2.bits, m, u2.error_prob, u2, params)
    except UnboundedSinrError as e:
      return self.infeasible(InfeasibleReason.POWER_BUDGET, str(e))
    p1 = gamma1 / u1.gain
    p2 = gamma1 * gamma2 / u1.gain + gamma2 / u2.gain
    if p1 + p2 > params.max_power:
      return self.infeasible(InfeasibleReason.POWER_BUDGET, f"p1+p2={p1 + p2} exceeds {params.max_power}")
    return self.feasible(NomaAllocation(scheme="CaseII-ShortBlock", m1=m, m2=m, gamma1=gamma1, gamma2=gamma2,
                                        p1=p1, p2=p2, energy=m * (p1 + p2),
                                        error_probs=(compose_error(u1.error_prob, u2.error_prob), u2.error_prob)))

  def branches(self, params: ScenarioParams) -> Dict[str, object]:
    """Results of every NOMA branch applicable to the scenario, keyed by scheme."""
    if params.weak_first:
      return {"CaseI": self.solve_case1(params)}
    return {"CaseII-FullBlock": self.solve_case2_full(params),
            "CaseII-ShortBlock": self.solve_case2_sic(params)}

  def solve_noma(self, params: ScenarioParams):
    """Dispatch to the NOMA case matching the channel ordering.

    Ties h1 = h2 go to Case I; equal-energy Case II branches go to the
    short-block (SIC) one.

    Returns:
        SolveResult: The cheapest feasible branch, or Infeasible.
    """
    self.check_monotonicity(params)
    results = self.branches(params)
    if params.weak_first:
      return results["CaseI"]
    full, sic = results["CaseII-FullBlock"], results["CaseII-ShortBlock"]
    logging.debug(f"Case II branch energies: full-block {full.energy}, short-block {sic.energy}")
    if sic.feasible and (not full.feasible or sic.energy <= full.energy):
      return sic
    if full.feasible:
      return full
    return sic

  def minimize_latency(self, params: ScenarioParams):
    """Smallest user-2 blocklength m2 whose power pair fits the budget (Case I).

    User 1 uses m1 = m2 while m2 <= D1 and m1 = D1 beyond. The total power is
    decreasing in m2, so the search is an integer bisection over
    [m_min, latency_cap].

    Returns:
        SolveResult: The allocation at the smallest feasible m2, or
        Infeasible(latency-cap).
    """
    self._require_weak_first(params)
    self.check_monotonicity(params)
    u1, u2 = params.user1, params.user2
    m_min, cap = params.min_blocklength, max(self.settings.latency_cap, params.min_blocklength)

    def point(m2: int) -> Optional[Tuple[int, float, float, float, float]]:
      m1 = min(m2, u1.deadline)
      try:
        gamma1 = self.sinr(u1.bits, m1, u1.error_prob, u1, params)
        gamma2 = self.sinr(u2.bits, m2, u2.error_prob, u2, params)
      except UnboundedSinrError:
        return None
      p1 = gamma1 * gamma2 / u2.gain + gamma1 / u1.gain
      p2 = gamma2 / u2.gain
      return (m1, gamma1, gamma2, p1, p2) if p1 + p2 <= params.max_power else None

    fits = lambda m2: point(m2) is not None
    if not fits(cap):
      return self.infeasible(InfeasibleReason.LATENCY_CAP, f"no power split fits with m2={cap}")
    if fits(m_min):
      m2 = m_min
    elif fits(u1.deadline):
      m2 = bisect_integer(fits, m_min, u1.deadline)
    else:
      m2 = bisect_integer(fits, u1.deadline, cap)
    m1, gamma1, gamma2, p1, p2 = point(m2)
    logging.info(f"Minimum latency: m2={m2} (m1={m1})")
    return self.feasible(NomaAllocation(scheme="CaseI", m1=m1, m2=m2, gamma1=gamma1, gamma2=gamma2,
                                        p1=p1, p2=p2, energy=m1 * p1 + m2 * p2,
                                        error_probs=(u1.error_prob, compose_error(u1.error_prob, u2.error_prob))))

  def rate_residuals(self, allocation: NomaAllocation, params: ScenarioParams) -> Dict[str, float]:
    u1, u2 = params.user1, params.user2
    return {"user1": self.residual(u1.bits, allocation.m1, allocation.gamma1, u1.error_prob, params),
            "user2": self.residual(u2.bits, allocation.m2, allocation.gamma2, u2.error_prob, params)}

  def feasible_mask(self, params: ScenarioParams, h1: np.ndarray, h2: np.ndarray) -> np.ndarray:
    """Vectorized NOMA feasibility over channel draws, for the scenario's demands.

    The SINR targets do not depend on the channel, so they are computed once
    and the closed-form power tests are applied to all draws.
    """
    u1, u2 = params.user1, params.user2
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    tol = self.settings.sinr_tol
    gamma1 = float(sinr_table(u1.bits, u1.deadline, u1.error_prob, tol=tol))
    gamma2 = float(sinr_table(u2.bits, u2.deadline, u2.error_prob, tol=tol))
    gamma2_short = float(sinr_table(u2.bits, u1.deadline, u2.error_prob, tol=tol))
    budget = params.max_power
    with np.errstate(divide="ignore", invalid="ignore"):
      case1 = gamma1 * gamma2 / h2 + gamma1 / h1 + gamma2 / h2 <= budget
      product = gamma1 * gamma2
      if product < 1.0:
        full = (gamma1 * h2 + product * h1 + gamma2 * h1 + product * h2) / (h1 * h2 * (1.0 - product)) <= budget
      else:
        full = np.zeros(h1.shape, dtype=bool)
      sic = gamma1 / h1 + gamma1 * gamma2_short / h1 + gamma2_short / h2 <= budget
    return np.where(h1 <= h2, case1, full | sic)
