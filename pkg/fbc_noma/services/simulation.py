import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..models.scenario import ScenarioParams, SolverSettings
from ..models.simulation import (ChannelCondition, ChannelModel, EnergyRow, EnergyTable, ExperimentConfig,
                                 InfeasibilityRow, RealizationRecord, Scheme, SweepAxis)
from ..utils.fbc import sinr_table
from ..utils.units import dbm_to_watts
from .hybrid import HybridSolver
from .noma import NomaSolver
from .tdma import TdmaSolver

# realizations that need the full hybrid solver before a warning is logged
HYBRID_WORKLOAD_WARNING = 100


def channel_stream(seed: int, block: int) -> np.random.Generator:
  """Counter-based random stream of one realization block.

  The stream depends only on the seed and the block index, so serial and
  parallel runs draw the same channels.
  """
  return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(block,))))


def sample_channels(model: ChannelModel, rng: np.random.Generator, size: int) -> Tuple[np.ndarray, np.ndarray]:
  """Draw `size` independent normalized gain pairs (h1, h2).

  Args:
      model (ChannelModel): Path loss, noise and fading model.
      rng (np.random.Generator): The random stream.
      size (int): Number of realizations.

  Returns:
      Tuple[np.ndarray, np.ndarray]: Gains of user 1 and user 2.
  """
  if model.fading_variance == 0.0:
    fade = np.ones((size, 2))
  else:
    fade = rng.rayleigh(scale=math.sqrt(model.fading_variance / 2.0), size=(size, 2)) ** 2
  gains = model.mean_gain * fade
  return gains[:, 0], gains[:, 1]


def sample_channel(model: ChannelModel, rng: np.random.Generator) -> Tuple[float, float]:
  h1, h2 = sample_channels(model, rng, 1)
  return float(h1[0]), float(h2[0])


def condition_mask(condition: ChannelCondition, h1: np.ndarray, h2: np.ndarray) -> np.ndarray:
  if condition == ChannelCondition.WEAK_FIRST:
    return h1 < h2
  if condition == ChannelCondition.STRONG_FIRST:
    return h1 >= h2
  return np.ones(np.shape(h1), dtype=bool)


def apply_sweep(params: ScenarioParams, axis: SweepAxis, value: float) -> ScenarioParams:
  """Scenario at one sweep point.

  Raises:
      ValueError: If the swept scenario is invalid (e.g. D1 above D2).
  """
  data = params.model_dump()
  if axis == SweepAxis.D1:
    data["user1"]["deadline"] = int(value)
  elif axis == SweepAxis.MAX_POWER:
    data["max_power"] = dbm_to_watts(value)
  elif axis == SweepAxis.PACKETS:
    data["user1"]["bits"] *= int(value)
    data["user2"]["bits"] *= int(value)
  return ScenarioParams.model_validate(data)


def shannon_baseline(params: ScenarioParams, settings: Optional[SolverSettings] = None):
  """Pure NOMA allocation under the Shannon rate, i.e. without dispersion penalty.

  Returns:
      SolveResult: The NOMA solution with every error target set to 0.5.
  """
  return NomaSolver(settings).solve_noma(params.with_error_probs(0.5))


class MonteCarloHarness:
  """
  Runs the transmission schemes over random channel realizations. The
  draws are shared by all sweep values (common random numbers), so curves
  are compared on the same channels.
  """

  def __init__(self, scenario: ScenarioParams, settings: Optional[SolverSettings] = None):
    """Initialize the harness.

    Args:
        scenario (ScenarioParams): Demands and power budget; the gains are
            replaced by the sampled ones.
        settings (SolverSettings, optional): Solver tolerances.
    """
    self.scenario = scenario
    self.settings = settings or SolverSettings()
    self.noma = NomaSolver(self.settings)
    self.tdma = TdmaSolver(self.settings)
    self.hybrid = HybridSolver(self.settings)

  def sweep_points(self, config: ExperimentConfig) -> List[ScenarioParams]:
    points = [apply_sweep(self.scenario, config.axis, value) for value in config.values]
    for params in points:
      self.noma.check_monotonicity(params)
    return points

  def solve_scheme(self, scheme: Scheme, params: ScenarioParams):
    if scheme == Scheme.NOMA:
      return self.noma.solve_noma(params)
    if scheme == Scheme.TDMA:
      return self.tdma.tdma_solver(params)
    if scheme == Scheme.HYBRID:
      return self.hybrid.solve_hybrid(params)
    return shannon_baseline(params, self.settings)

  def _draw(self, config: ExperimentConfig, block: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    start = block * config.block_size
    size = min(config.block_size, config.realizations - start)
    h1, h2 = sample_channels(config.channel, channel_stream(config.seed, block), size)
    return np.arange(start, start + size), h1, h2

  def energy_block(self, config: ExperimentConfig, block: int) -> Dict[Tuple[int, Scheme], Tuple[List[float], int, List[RealizationRecord]]]:
    """Per-realization energies of one block, keyed by (sweep index, scheme)."""
    index, h1, h2 = self._draw(config, block)
    keep = condition_mask(config.condition, h1, h2)
    out = {}
    for k, params in enumerate(self.sweep_points(config)):
      for scheme in config.schemes:
        energies, infeasible, records = [], 0, []
        for i in np.flatnonzero(keep):
          result = self.solve_scheme(scheme, params.with_gains(h1[i], h2[i]))
          energy = result.energy * config.energy_factor if result.feasible else math.inf
          if result.feasible:
            energies.append(energy)
          else:
            infeasible += 1
          if config.keep_records:
            records.append(RealizationRecord(value=config.values[k], index=int(index[i]), h1=float(h1[i]),
                                             h2=float(h2[i]), scheme=scheme, energy=energy,
                                             feasible=result.feasible))
        out[(k, scheme)] = (energies, infeasible, records)
    logging.debug(f"Energy block {block} done ({len(index)} realizations)")
    return out

  def infeasibility_block(self, config: ExperimentConfig, block: int) -> Dict[Tuple[int, Scheme], Tuple[int, int]]:
    """Infeasible and conditioned draw counts of one block, keyed by (sweep index, scheme)."""
    _, h1, h2 = self._draw(config, block)
    keep = condition_mask(config.condition, h1, h2)
    h1, h2 = h1[keep], h2[keep]
    draws = int(h1.size)
    out = {}
    for k, params in enumerate(self.sweep_points(config)):
      noma = self.noma.feasible_mask(params, h1, h2)
      tdma = self.tdma.feasible_mask(params, h1, h2)
      masks = {Scheme.NOMA: noma, Scheme.TDMA: tdma}
      if Scheme.SHANNON_NOMA in config.schemes:
        masks[Scheme.SHANNON_NOMA] = self.noma.feasible_mask(params.with_error_probs(0.5), h1, h2)
      if Scheme.HYBRID in config.schemes:
        masks[Scheme.HYBRID] = self.hybrid_mask(params, h1, h2, noma | tdma)
      for scheme in config.schemes:
        out[(k, scheme)] = (draws - int(np.count_nonzero(masks[scheme])), draws)
    return out

  def hybrid_mask(self, params: ScenarioParams, h1: np.ndarray, h2: np.ndarray, endpoints: np.ndarray) -> np.ndarray:
    """Hybrid feasibility: feasible wherever an endpoint is, solved elsewhere.

    User 1 needs at least G1(D1)/P_max of gain in any split, so draws below
    that are skipped without solving.
    """
    mask = endpoints.copy()
    if params.max_power <= 0.0:
      return mask
    u1 = params.user1
    need1 = float(sinr_table(u1.bits, u1.deadline, u1.error_prob, tol=self.settings.sinr_tol)) / params.max_power
    pending = np.flatnonzero(~endpoints & (h1 >= need1))
    if pending.size > HYBRID_WORKLOAD_WARNING:
      logging.warning(f"Solving the hybrid scheme on {pending.size} realizations, this may take a while")
    for i in pending:
      mask[i] = self.hybrid.solve_hybrid(params.with_gains(h1[i], h2[i])).feasible
    return mask

  def _blocks(self, config: ExperimentConfig, mode: str) -> List[Dict]:
    tasks = [(self.scenario, self.settings, config, block, mode) for block in range(config.blocks)]
    if config.workers > 1 and len(tasks) > 1:
      with ProcessPoolExecutor(max_workers=config.workers) as executor:
        return list(executor.map(_run_block, tasks))
    return [_run_block(task) for task in tasks]

  def energy_sweep(self, config: ExperimentConfig) -> EnergyTable:
    """Mean energy per scheme and sweep value over the feasible realizations.

    Infeasible draws are excluded from the mean and counted. Means use
    exactly rounded summation so the reduction order does not matter.

    Args:
        config (ExperimentConfig): The experiment.

    Returns:
        EnergyTable: One row per (sweep value, scheme), in sweep order, and
        the per-realization records when `keep_records` is set.
    """
    blocks = self._blocks(config, "energy")
    rows, records = [], []
    for k, value in enumerate(config.values):
      for scheme in config.schemes:
        energies, infeasible = [], 0
        for partial in blocks:
          part, failed, kept = partial[(k, scheme)]
          energies.extend(part)
          infeasible += failed
          records.extend(kept)
        feasible = len(energies)
        draws = feasible + infeasible
        rows.append(EnergyRow(value=value, scheme=scheme,
                              energy=math.fsum(energies) / feasible if feasible else math.nan,
                              feasible_fraction=feasible / draws if draws else math.nan,
                              seed=config.seed, feasible=feasible, infeasible=infeasible, draws=draws))
    logging.info(f"Energy sweep over {config.axis.value}: {len(rows)} rows from {config.realizations} realizations")
    return EnergyTable(rows=rows, records=records if config.keep_records else None)

  def estimate_infeasibility(self, config: ExperimentConfig) -> List[InfeasibilityRow]:
    """Fraction of realizations where each scheme has no feasible allocation.

    NOMA and TDMA use closed-form power tests on whole blocks; the hybrid
    solver only runs where both are infeasible.

    Returns:
        List[InfeasibilityRow]: Probability and binomial standard error per
        (sweep value, scheme).
    """
    blocks = self._blocks(config, "infeasibility")
    rows = []
    for k, value in enumerate(config.values):
      for scheme in config.schemes:
        infeasible = sum(partial[(k, scheme)][0] for partial in blocks)
        draws = sum(partial[(k, scheme)][1] for partial in blocks)
        rows.append(InfeasibilityRow.from_counts(value, scheme, infeasible, draws, config.seed))
    logging.info(f"Infeasibility estimate over {config.axis.value}: {config.realizations} realizations")
    return rows


def _run_block(task) -> Dict:
  # module level so that process pools can pickle it
  scenario, settings, config, block, mode = task
  harness = MonteCarloHarness(scenario, settings)
  if mode == "energy":
    return harness.energy_block(config, block)
  return harness.infeasibility_block(config, block)
