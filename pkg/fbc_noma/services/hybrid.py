import logging
import math
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from ..models.scenario import (HybridAllocation, InfeasibleReason, NomaAllocation, ScenarioParams,
                               SolverSettings, TdmaAllocation)
from ..utils.approx import InfeasibleRateError, sinr_approx
from ..utils.fbc import FbcDomainError, sinr_table
from ..utils.search import golden_section_integer
from .noma import NomaSolver, compose_errors
from .solver import AllocationSolver, PreconditionError
from .tdma import TdmaSolver

# (n21, m1, m21, m22)
Candidate = Tuple[int, int, int, int]
Objective = Callable[..., float]


class HybridSolver(AllocationSolver):
  """
  Split-packet hybrid NOMA/TDMA scheme. User 2's packet is cut into n21 bits
  superposed on user 1's codeword and n22 = N2 - n21 bits sent alone in a
  slot of m22 symbols. The degenerate splits are TDMA (n21 = 0) and pure
  NOMA (n22 = 0); both are part of every search.
  """

  def __init__(self, settings: Optional[SolverSettings] = None):
    super().__init__(settings)
    self.noma = NomaSolver(self.settings)
    self.tdma = TdmaSolver(self.settings)

  def solve(self, params: ScenarioParams):
    return self.solve_hybrid(params)

  #
  # Error budget
  #

  def part_error_probs(self, n21: float, n22: float, params: ScenarioParams) -> Tuple[float, float]:
    """Error targets of the two parts; a part alone gets user 2's whole budget."""
    if n21 <= 0 or n22 <= 0:
      return params.user2.error_prob, params.user2.error_prob
    return params.eps21, params.eps22

  def receiver_error_probs(self, n21: int, n22: int, params: ScenarioParams) -> Tuple[float, float]:
    """Overall decoding error of each receiver, counting its SIC steps."""
    eps1 = params.user1.error_prob
    eps21, eps22 = self.part_error_probs(n21, n22, params)
    parts2 = ([eps21] if n21 > 0 else []) + ([eps22] if n22 > 0 else [])
    if params.weak_first:
      # user 2 cancels user 1's codeword before decoding its superposed part
      return eps1, compose_errors(*(([eps1] if n21 > 0 else []) + parts2))
    return compose_errors(*([eps1] + ([eps21] if n21 > 0 else []))), compose_errors(*parts2)

  #
  # Candidate evaluation
  #

  def _part_sinr(self, bits: float, m: int, error_prob: float, params: ScenarioParams, surrogate: bool) -> float:
    if bits <= 0:
      return 0.0
    if surrogate:
      return sinr_approx(bits, m, error_prob, cap=self.sinr_cap(params.user2, params))
    return self.sinr(int(bits), m, error_prob, params.user2, params)

  def candidate_powers(self, candidate: Candidate, params: ScenarioParams,
                       surrogate: bool = False) -> Tuple[Tuple[float, float, float], Tuple[float, float, float]]:
    """Recover the SINRs and powers that make a candidate meet every rate constraint.

    Args:
        candidate (Candidate): (n21, m1, m21, m22), n21 may be fractional when
            `surrogate` is set.
        params (ScenarioParams): The scenario.
        surrogate (bool, optional): Use the concave rate surrogate for user 2's
            parts. Defaults to False.

    Returns:
        Tuple: (gamma1, gamma21, gamma22) and (p1, p21, p22).

    Raises:
        UnboundedSinrError: If an exact demand needs an SINR above the cap.
        InfeasibleRateError: If a surrogate demand needs an SINR above the cap.
    """
    n21, m1, m21, m22 = candidate
    u1, u2 = params.user1, params.user2
    n22 = u2.bits - n21
    if surrogate:
      eps21, eps22 = params.eps21, params.eps22
    else:
      eps21, eps22 = self.part_error_probs(n21, n22, params)
    gamma1 = self.sinr(u1.bits, m1, u1.error_prob, u1, params)
    gamma21 = self._part_sinr(n21, m21, eps21, params, surrogate)
    gamma22 = self._part_sinr(n22, m22, eps22, params, surrogate)
    h1, h2 = u1.gain, u2.gain
    if params.weak_first:
      p1 = gamma1 * gamma21 / h2 + gamma1 / h1
      p21 = gamma21 / h2
    else:
      p1 = gamma1 / h1
      p21 = gamma21 * (gamma1 / h1 + 1.0 / h2)
    return (gamma1, gamma21, gamma22), (p1, p21, gamma22 / h2)

  def meets_latency(self, candidate: Candidate, params: ScenarioParams) -> bool:
    n21, m1, m21, m22 = candidate
    m_min, d1, d2 = params.min_blocklength, params.user1.deadline, params.user2.deadline
    n22 = params.user2.bits - n21
    if not 0 <= n21 <= params.user2.bits or not m_min <= m1 <= d1:
      return False
    if n21 > 0 and m21 < m_min:
      return False
    if n22 > 0 and m22 < m_min:
      return False
    last = m22 if n22 > 0 else 0
    if params.weak_first:
      return m1 <= m21 and m21 + last <= d2
    return m21 <= m1 and m1 + last <= d2

  def in_feasible_set_h(self, candidate: Candidate, params: ScenarioParams) -> bool:
    """Check a candidate's latency and power box constraints with exact SINR maps.

    Args:
        candidate (Candidate): (n21, m1, m21, m22).
        params (ScenarioParams): The scenario.

    Returns:
        bool: True if p1 + p21 <= P_max and p22 <= P_max.
    """
    if not self.meets_latency(candidate, params):
      return False
    try:
      _, (p1, p21, p22) = self.candidate_powers(candidate, params)
    except (FbcDomainError, InfeasibleRateError):
      return False
    return p1 + p21 <= params.max_power and p22 <= params.max_power

  def _energy(self, candidate: Candidate, params: ScenarioParams, surrogate: bool, enforce_power: bool) -> float:
    _, m1, m21, m22 = candidate
    _, (p1, p21, p22) = self.candidate_powers(candidate, params, surrogate=surrogate)
    if enforce_power and (p1 + p21 > params.max_power or p22 > params.max_power):
      return math.inf
    return m1 * p1 + m21 * p21 + m22 * p22

  def hybrid_objective_case_a(self, n21: float, m21: int, params: ScenarioParams,
                              surrogate: bool = False, enforce_power: bool = False) -> float:
    """Case I energy with user 1 sharing user 2's superposed block, m1 = m21 < D1.

    Args:
        n21 (float): Bits of user 2 superposed on user 1.
        m21 (int): Length of the superposed block.
        params (ScenarioParams): The scenario.
        surrogate (bool, optional): Use the concave surrogate for user 2's parts.
        enforce_power (bool, optional): Return inf outside the power box.

    Returns:
        float: m1*p1 + m21*p21 + m22*p22 with m22 = D2 - m21.
    """
    return self._energy((n21, m21, m21, params.user2.deadline - m21), params, surrogate, enforce_power)

  def hybrid_objective_case_b(self, n21: float, m21: int, params: ScenarioParams,
                              surrogate: bool = False, enforce_power: bool = False) -> float:
    """Case I energy with user 1 pinned to its deadline, m1 = D1 <= m21."""
    return self._energy((n21, params.user1.deadline, m21, params.user2.deadline - m21),
                        params, surrogate, enforce_power)

  def hybrid_objective_case_2(self, n21: float, m1: int, params: ScenarioParams,
                              surrogate: bool = False, enforce_power: bool = False) -> float:
    """Case II energy: user 2's superposed part ends with user 1's codeword, m21 = m1."""
    return self._energy((n21, m1, m1, params.user2.deadline - m1), params, surrogate, enforce_power)

  def golden_section_bits(self, m21: int, objective: Objective, params: ScenarioParams) -> Tuple[int, float]:
    """Best bit split at a fixed blocklength.

    The golden-section search runs on the surrogate energy over the
    continuous range [0, N2 - 1]; the integers left in the final interval are
    scored with exact SINR maps and the power box.

    Args:
        m21 (int): Fixed blocklength passed to the objective.
        objective (Objective): One of the hybrid_objective_* methods.
        params (ScenarioParams): The scenario.

    Returns:
        Tuple[int, float]: The split n21 and its exact energy (inf if no
        candidate fits the power box).
    """

    def relaxed(n21: float) -> float:
      try:
        return objective(n21, m21, params, surrogate=True)
      except (FbcDomainError, InfeasibleRateError):
        return math.inf

    def exact(n21: int) -> float:
      try:
        return objective(n21, m21, params, enforce_power=True)
      except (FbcDomainError, InfeasibleRateError):
        return math.inf

    return golden_section_integer(relaxed, 0, params.user2.bits - 1, ratio=self.settings.golden_ratio,
                                  tol=self.settings.golden_tol, score=exact)

  #
  # Allocations
  #

  def allocation(self, candidate: Candidate, params: ScenarioParams,
                 noma_scheme: Optional[str] = None) -> HybridAllocation:
    """Build the reported allocation of a candidate with exact SINR maps."""
    n21, m1, m21, m22 = candidate
    n22 = params.user2.bits - n21
    if n22 <= 0:
      m22 = 0
    (gamma1, gamma21, gamma22), (p1, p21, p22) = self.candidate_powers((n21, m1, m21, m22), params)
    return HybridAllocation(case="I" if params.weak_first else "II", n21=n21, n22=n22, m1=m1, m21=m21, m22=m22,
                            gamma1=gamma1, gamma21=gamma21, gamma22=gamma22, p1=p1, p21=p21, p22=p22,
                            energy=m1 * p1 + m21 * p21 + m22 * p22,
                            error_probs=self.receiver_error_probs(n21, n22, params), noma_scheme=noma_scheme)

  def from_tdma(self, allocation: TdmaAllocation, params: ScenarioParams) -> HybridAllocation:
    return HybridAllocation(case="I" if params.weak_first else "II", n21=0, n22=params.user2.bits,
                            m1=allocation.m1, m21=allocation.m1, m22=allocation.m2,
                            gamma1=allocation.gamma1, gamma21=0.0, gamma22=allocation.gamma2,
                            p1=allocation.p1, p21=0.0, p22=allocation.p2, energy=allocation.energy,
                            error_probs=allocation.error_probs)

  def from_noma(self, allocation: NomaAllocation, params: ScenarioParams) -> HybridAllocation:
    return HybridAllocation(case="I" if params.weak_first else "II", n21=params.user2.bits, n22=0,
                            m1=allocation.m1, m21=allocation.m2, m22=0,
                            gamma1=allocation.gamma1, gamma21=allocation.gamma2, gamma22=0.0,
                            p1=allocation.p1, p21=allocation.p2, p22=0.0, energy=allocation.energy,
                            error_probs=allocation.error_probs, noma_scheme=allocation.scheme)

  def endpoints(self, params: ScenarioParams) -> Dict[str, HybridAllocation]:
    """Feasible degenerate splits: TDMA and every applicable pure NOMA branch."""
    found = {}
    tdma = self.tdma.tdma_solver(params)
    if tdma.feasible:
      found["TDMA"] = self.from_tdma(tdma.allocation, params)
    for scheme, result in self.noma.branches(params).items():
      if result.feasible:
        found[scheme] = self.from_noma(result.allocation, params)
    return found

  def _best(self, scanned: Optional[HybridAllocation], params: ScenarioParams, label: str):
    best = scanned
    for scheme, endpoint in self.endpoints(params).items():
      logging.debug(f"{label} endpoint {scheme}: energy {endpoint.energy}")
      if best is None or endpoint.energy < best.energy:
        best = endpoint
    if best is None:
      return self.infeasible(InfeasibleReason.NO_FEASIBLE_POINT, f"{label}: no split fits the power budget")
    logging.info(f"{label}: n21={best.n21}, n22={best.n22}, m=({best.m1}, {best.m21}, {best.m22}), energy {best.energy}")
    return self.feasible(best)

  #
  # Solvers
  #

  def solve_hybrid_case1(self, params: ScenarioParams):
    """Golden-section hybrid solver for h1 <= h2.

    Scans the superposed block length m21 over [m_min, D2 - m_min]. Below D1
    user 1 shares the block (m1 = m21); from D1 on user 1 uses its deadline.
    Each blocklength gets a golden-section search over the bit split, and
    splits outside the power box are skipped.

    Returns:
        SolveResult: The best of the scanned splits and the TDMA and NOMA
        endpoints, or Infeasible.

    Raises:
        PreconditionError: If h1 > h2.
        MonotonicityError: If a user breaks energy monotonicity.
    """
    if not params.weak_first:
      raise PreconditionError(f"Invalid channel ordering: Case I needs h1 <= h2, got h1={params.user1.gain}, h2={params.user2.gain}")
    self.check_monotonicity(params)
    d1, d2, m_min = params.user1.deadline, params.user2.deadline, params.min_blocklength
    best, best_energy = None, math.inf
    for m21 in range(m_min, d2 - m_min + 1):
      objective = self.hybrid_objective_case_a if m21 < d1 else self.hybrid_objective_case_b
      n21, energy = self.golden_section_bits(m21, objective, params)
      if energy < best_energy:
        best, best_energy = (n21, min(m21, d1), m21, d2 - m21), energy
    scanned = self.allocation(best, params) if best else None
    return self._best(scanned, params, "Hybrid Case I")

  def solve_hybrid_case2(self, params: ScenarioParams):
    """Golden-section hybrid solver for h1 > h2.

    User 2's superposed part shares user 1's block (m21 = m1), so the scan
    is over m1 in [m_min, min(D1, D2 - m_min)] with m22 = D2 - m1.

    Raises:
        PreconditionError: If h1 <= h2.
    """
    if params.weak_first:
      raise PreconditionError(f"Invalid channel ordering: Case II needs h1 > h2, got h1={params.user1.gain}, h2={params.user2.gain}")
    self.check_monotonicity(params)
    d1, d2, m_min = params.user1.deadline, params.user2.deadline, params.min_blocklength
    best, best_energy = None, math.inf
    for m1 in range(m_min, min(d1, d2 - m_min) + 1):
      n21, energy = self.golden_section_bits(m1, self.hybrid_objective_case_2, params)
      if energy < best_energy:
        best, best_energy = (n21, m1, m1, d2 - m1), energy
    scanned = self.allocation(best, params) if best else None
    return self._best(scanned, params, "Hybrid Case II")

  def solve_hybrid(self, params: ScenarioParams):
    """Dispatch to the hybrid case matching the channel ordering (ties go to Case I)."""
    if params.weak_first:
      return self.solve_hybrid_case1(params)
    return self.solve_hybrid_case2(params)

  def solve_hybrid_exhaustive(self, params: ScenarioParams):
    """Exhaustive benchmark over every integer split and blocklength.

    Case I searches (n21, m1, m21) with m1 <= min(D1, m21) and m22 = D2 - m21;
    Case II searches (n21, m1) with m21 = m1. The SINR maps are tabulated once
    and the energies evaluated in blocks. Ties go to the smallest m21, then
    the smallest n21.

    Returns:
        SolveResult: The global optimum including the NOMA endpoints, or
        Infeasible.
    """
    self.check_monotonicity(params)
    u1, u2 = params.user1, params.user2
    h1, h2, budget = u1.gain, u2.gain, params.max_power
    d1, d2, m_min = u1.deadline, u2.deadline, params.min_blocklength
    tol = self.settings.sinr_tol
    cap1, cap2 = self.sinr_cap(u1, params), self.sinr_cap(u2, params)
    n21 = np.arange(0, u2.bits)

    def part_tables(blocks21: np.ndarray, blocks22: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
      gamma21 = sinr_table(n21[:, None], blocks21[None, :], params.eps21, tol=tol, upper=cap2)
      alone = sinr_table(u2.bits, blocks22, u2.error_prob, tol=tol, upper=cap2)
      split = sinr_table((u2.bits - n21[1:])[:, None], blocks22[None, :], params.eps22, tol=tol, upper=cap2)
      return gamma21, np.vstack([alone[None, :], split])

    best, best_energy = None, math.inf
    with np.errstate(invalid="ignore"):
      if params.weak_first:
        m21s = np.arange(m_min, d2 - m_min + 1)
        m1s = np.arange(m_min, d1 + 1)
        gamma1 = sinr_table(u1.bits, m1s, u1.error_prob, tol=tol, upper=cap1)
        gamma21, gamma22 = part_tables(m21s, d2 - m21s)
        for j, m21 in enumerate(m21s):
          k = min(d1, int(m21)) - m_min + 1
          g1 = gamma1[None, :k]
          p1 = g1 * gamma21[:, j, None] / h2 + g1 / h1
          p21 = gamma21[:, j, None] / h2
          p22 = gamma22[:, j, None] / h2
          ok = (p1 + p21 <= budget) & (p22 <= budget)
          energy = np.where(ok, m1s[None, :k] * p1 + m21 * p21 + (d2 - m21) * p22, np.inf)
          i, c = np.unravel_index(int(np.argmin(energy)), energy.shape)
          if energy[i, c] < best_energy:
            best, best_energy = (int(n21[i]), int(m1s[c]), int(m21), int(d2 - m21)), float(energy[i, c])
      else:
        m1s = np.arange(m_min, min(d1, d2 - m_min) + 1)
        if m1s.size:
          gamma1 = sinr_table(u1.bits, m1s, u1.error_prob, tol=tol, upper=cap1)
          gamma21, gamma22 = part_tables(m1s, d2 - m1s)
          p1 = gamma1[None, :] / h1
          p21 = gamma21 * (gamma1[None, :] / h1 + 1.0 / h2)
          p22 = gamma22 / h2
          ok = (p1 + p21 <= budget) & (p22 <= budget)
          energy = np.where(ok, m1s * (p1 + p21) + (d2 - m1s) * p22, np.inf)
          # blocklength-major so that ties go to the shortest block
          c, i = np.unravel_index(int(np.argmin(energy.T)), energy.T.shape)
          if energy[i, c] < best_energy:
            m1 = int(m1s[c])
            best, best_energy = (int(n21[i]), m1, m1, d2 - m1), float(energy[i, c])
    logging.debug(f"Exhaustive hybrid search: best split {best} with energy {best_energy}")
    scanned = self.allocation(best, params) if best else None
    return self._best(scanned, params, "Exhaustive hybrid")

  def rate_residuals(self, allocation: HybridAllocation, params: ScenarioParams) -> Dict[str, float]:
    u1 = params.user1
    eps21, eps22 = self.part_error_probs(allocation.n21, allocation.n22, params)
    return {"user1": self.residual(u1.bits, allocation.m1, allocation.gamma1, u1.error_prob, params),
            "user2_superposed": self.residual(allocation.n21, allocation.m21, allocation.gamma21, eps21, params),
            "user2_alone": self.residual(allocation.n22, allocation.m22, allocation.gamma22, eps22, params)}
