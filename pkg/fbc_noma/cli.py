"""Command-line front end of the allocation solvers.

Configuration comes from an optional YAML (or JSON) file whose sections
mirror RunConfig; command-line flags override the file.
"""
import argparse
import copy
import logging
import math
import sys
from typing import Any, Dict, List, Optional

import yaml
from pydantic import ValidationError

from .models.config import Command, RunConfig
from .models.simulation import EnergyRow
from .services import HybridSolver, MonteCarloHarness, NomaSolver, SolverError, TdmaSolver, apply_sweep
from .utils.approx import approx_gap_table
from .utils.output import write_csv, write_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

ENERGY_COLUMNS = ["value", "scheme", "energy", "feasible_fraction", "seed"]
INFEASIBILITY_COLUMNS = ["value", "scheme", "probability", "std_error", "infeasible", "draws", "seed"]
GAP_COLUMNS = ["blocklength", "error_prob", "a", "beta", "x_lo", "x_mid", "max_gap_bpcu"]
SOLVE_COLUMNS = ["status", "reason", "energy"]


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
  """Merge nested dicts, values of `override` winning."""
  merged = copy.deepcopy(base)
  for key, value in override.items():
    if isinstance(value, dict) and isinstance(merged.get(key), dict):
      merged[key] = deep_merge(merged[key], value)
    else:
      merged[key] = value
  return merged


def load_config_file(path: str) -> Dict[str, Any]:
  """Read a config file. A JSON result file is accepted too: its `config` is used.

  Raises:
      OSError: If the file cannot be read.
      yaml.YAMLError: If the file is not valid YAML.
      ValueError: If the top level is not a mapping.
  """
  with open(path, "r") as f:
    data = yaml.safe_load(f) or {}
  if not isinstance(data, dict):
    raise ValueError(f"Invalid config file {path}: top level must be a mapping")
  if "config" in data and "command" not in data:
    data = data["config"]
  return data


def _set(target: Dict[str, Any], dotted: str, value: Any):
  keys = dotted.split(".")
  for key in keys[:-1]:
    target = target.setdefault(key, {})
  target[keys[-1]] = value


# flag destination -> config key
_FLAG_KEYS = {
  "n1": "scenario.user1.bits",
  "n2": "scenario.user2.bits",
  "d1": "scenario.user1.deadline",
  "d2": "scenario.user2.deadline",
  "eps1": "scenario.user1.error_prob",
  "eps2": "scenario.user2.error_prob",
  "h1": "scenario.user1.gain",
  "h2": "scenario.user2.gain",
  "max_power": "scenario.max_power",
  "min_blocklength": "scenario.min_blocklength",
  "split_eps": "scenario.split_error_probs",
  "axis": "experiment.axis",
  "values": "experiment.values",
  "schemes": "experiment.schemes",
  "realizations": "experiment.realizations",
  "workers": "experiment.workers",
  "condition": "experiment.condition",
  "snr_loss_db": "experiment.snr_loss_db",
  "keep_records": "experiment.keep_records",
  "output": "output.path",
  "format": "output.format",
  "seed": "seed",
  "metric": "metric",
  "exhaustive": "exhaustive",
}


def _csv_list(cast):
  return lambda text: [cast(item) for item in text.split(",") if item.strip()]


def build_parser() -> argparse.ArgumentParser:
  parser = argparse.ArgumentParser(prog="fbc-noma", description="Energy-minimal two-user downlink allocations "
                                   "under finite-blocklength coding.")
  parser.add_argument("command", choices=[c.value for c in Command])
  parser.add_argument("-c", "--config", help="YAML/JSON config file (flags override it)")
  parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logs")
  scenario = parser.add_argument_group("scenario")
  scenario.add_argument("--n1", type=int, help="user 1 packet size (bits)")
  scenario.add_argument("--n2", type=int, help="user 2 packet size (bits)")
  scenario.add_argument("--d1", type=int, help="user 1 deadline (symbols)")
  scenario.add_argument("--d2", type=int, help="user 2 deadline (symbols)")
  scenario.add_argument("--eps1", type=float, help="user 1 block error target")
  scenario.add_argument("--eps2", type=float, help="user 2 block error target")
  scenario.add_argument("--h1", type=float, help="user 1 normalized channel gain")
  scenario.add_argument("--h2", type=float, help="user 2 normalized channel gain")
  scenario.add_argument("--max-power", dest="max_power", help="power budget, e.g. 10W or 40dBm")
  scenario.add_argument("--min-blocklength", dest="min_blocklength", type=int, help="minimum blocklength (symbols)")
  scenario.add_argument("--split-eps", dest="split_eps", type=float, nargs=2, metavar=("EPS21", "EPS22"),
                        help="error targets of user 2's two parts in the hybrid scheme")
  experiment = parser.add_argument_group("experiment")
  experiment.add_argument("--axis", choices=["d1", "max_power", "packets"], help="swept quantity (max_power in dBm)")
  experiment.add_argument("--values", type=_csv_list(float), help="comma-separated sweep values")
  experiment.add_argument("--schemes", type=_csv_list(str), help="comma-separated schemes")
  experiment.add_argument("--realizations", type=int, help="channel realizations")
  experiment.add_argument("--workers", type=int, help="worker processes")
  experiment.add_argument("--condition", choices=["all", "weak-first", "strong-first"], help="channel ordering filter")
  experiment.add_argument("--snr-loss-db", dest="snr_loss_db", type=float, help="SNR loss applied to energies (dB)")
  experiment.add_argument("--keep-records", dest="keep_records", action="store_const", const=True,
                          help="emit per-realization records (JSON only)")
  experiment.add_argument("--metric", choices=["energy", "infeasibility"], help="Monte-Carlo metric")
  parser.add_argument("--exhaustive", action="store_const", const=True, help="use the exhaustive hybrid search")
  parser.add_argument("--seed", type=int, help="random seed")
  parser.add_argument("-o", "--output", help="output file (stdout by default)")
  parser.add_argument("--format", choices=["json", "csv"], help="output format")
  return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
  """Resolve the run configuration from the config file and the flags.

  Raises:
      ValidationError: If the merged configuration is invalid.
  """
  data = load_config_file(args.config) if args.config else {}
  overrides = {"command": args.command}
  for dest, key in _FLAG_KEYS.items():
    value = getattr(args, dest, None)
    if value is not None:
      _set(overrides, key, value)
  return RunConfig.model_validate(deep_merge(data, overrides))


def configure_logging(verbosity: int):
  level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
  logging.basicConfig(level=level, stream=sys.stderr, format="%(asctime)s %(levelname)s %(message)s")


def _result_payload(config: RunConfig, result, residuals: Optional[Dict[str, float]] = None) -> Dict[str, Any]:
  payload = {"config": config.model_dump(mode="json"), "status": result.status}
  if result.feasible:
    payload["allocation"] = result.allocation.model_dump(mode="json")
    payload["energy"] = result.energy
    payload["certificates"] = residuals or {}
  else:
    payload["reason"] = result.reason.value
    payload["detail"] = result.detail
  return payload


def _branch_summary(results: Dict[str, Any]) -> Dict[str, Any]:
  return {scheme: {"status": r.status, "energy": r.energy if r.feasible else None,
                   "reason": None if r.feasible else r.reason.value}
          for scheme, r in results.items()}


def _emit(config: RunConfig, payload: Dict[str, Any], rows: Optional[List[Dict[str, Any]]] = None,
          columns: Optional[List[str]] = None):
  stream = open(config.output.path, "w", newline="") if config.output.path else sys.stdout
  try:
    if config.output.format == "csv":
      write_csv(rows if rows is not None else [payload], columns or SOLVE_COLUMNS, stream)
    else:
      write_json(payload, stream)
  finally:
    if stream is not sys.stdout:
      stream.close()


def _solve(config: RunConfig) -> int:
  params, settings = config.scenario, config.settings
  extra = {}
  if config.command == Command.SOLVE_NOMA:
    solver = NomaSolver(settings)
    result = solver.solve_noma(params)
    extra["branches"] = _branch_summary(solver.branches(params))
  elif config.command == Command.FEASIBILITY:
    solver = NomaSolver(settings)
    result = solver.solve_noma(params)
    extra["branches"] = _branch_summary({"noma": result, "tdma": TdmaSolver(settings).tdma_solver(params)})
  elif config.command == Command.MIN_LATENCY:
    solver = NomaSolver(settings)
    result = solver.minimize_latency(params)
  elif config.command == Command.SOLVE_TDMA:
    solver = TdmaSolver(settings)
    result = solver.tdma_solver(params)
  else:
    solver = HybridSolver(settings)
    result = solver.solve_hybrid_exhaustive(params) if config.exhaustive else solver.solve_hybrid(params)
    extra["branches"] = _branch_summary({"noma": solver.noma.solve_noma(params),
                                         "tdma": solver.tdma.tdma_solver(params)})
  residuals = solver.rate_residuals(result.allocation, params) if result.feasible else None
  payload = _result_payload(config, result, residuals)
  payload.update(extra)
  if config.command == Command.FEASIBILITY:
    payload.pop("allocation", None)
  row = {"status": result.status, "reason": "" if result.feasible else result.reason.value, "energy": result.energy}
  _emit(config, payload, [row], SOLVE_COLUMNS)
  logging.info(f"{config.command.value}: {result.status}")
  return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def _sweep(config: RunConfig) -> int:
  """Deterministic-channel sweep: every scheme at every sweep value, fixed gains."""
  experiment = config.experiment
  harness = MonteCarloHarness(config.scenario, config.settings)
  rows = []
  for value in experiment.values:
    params = apply_sweep(config.scenario, experiment.axis, value)
    for scheme in experiment.schemes:
      result = harness.solve_scheme(scheme, params)
      energy = result.energy * experiment.energy_factor if result.feasible else math.nan
      rows.append(EnergyRow(value=value, scheme=scheme, energy=energy, feasible_fraction=float(result.feasible),
                            seed=experiment.seed, feasible=int(result.feasible),
                            infeasible=int(not result.feasible), draws=1))
  dumped = [row.model_dump(mode="json") for row in rows]
  _emit(config, {"config": config.model_dump(mode="json"), "rows": dumped}, dumped, ENERGY_COLUMNS)
  return EXIT_OK


def _monte_carlo(config: RunConfig) -> int:
  harness = MonteCarloHarness(config.scenario, config.settings)
  payload = {"config": config.model_dump(mode="json")}
  if config.metric == "infeasibility":
    rows = [row.model_dump(mode="json") for row in harness.estimate_infeasibility(config.experiment)]
    columns = INFEASIBILITY_COLUMNS
  else:
    table = harness.energy_sweep(config.experiment)
    rows = [row.model_dump(mode="json") for row in table.rows]
    columns = ENERGY_COLUMNS
    if table.records is not None:
      payload["records"] = [record.model_dump(mode="json") for record in table.records]
  payload["rows"] = rows
  _emit(config, payload, rows, columns)
  return EXIT_OK


def _approx_gap(config: RunConfig) -> int:
  rows = approx_gap_table(config.approx.blocklengths, config.approx.error_probs)
  _emit(config, {"config": config.model_dump(mode="json"), "rows": rows}, rows, GAP_COLUMNS)
  return EXIT_OK


def run(config: RunConfig) -> int:
  """Execute a resolved run and write its output.

  Args:
      config (RunConfig): The run configuration.

  Returns:
      int: 0 on success, 2 on configuration errors, 3 when a single-instance
      solve is infeasible.
  """
  try:
    if config.command == Command.SWEEP:
      return _sweep(config)
    if config.command == Command.MONTE_CARLO:
      return _monte_carlo(config)
    if config.command == Command.APPROX_GAP:
      return _approx_gap(config)
    return _solve(config)
  except (SolverError, ValueError, OSError) as e:
    logging.error(f"{config.command.value} failed: {e}")
    return EXIT_CONFIG


def main(argv: Optional[List[str]] = None) -> int:
  parser = build_parser()
  args = parser.parse_args(argv)
  configure_logging(args.verbose)
  try:
    config = config_from_args(args)
  except (ValidationError, yaml.YAMLError, ValueError, OSError) as e:
    logging.error(f"Invalid configuration: {e}")
    return EXIT_CONFIG
  return run(config)


if __name__ == "__main__":
  sys.exit(main())
