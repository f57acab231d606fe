import io
import json
import math
from fbc_noma.models.simulation import Scheme
from fbc_noma.utils.output import format_cell, round_significant, write_csv, write_json

def test_round_significant():
  assert round_significant(1.0 / 3.0) == 0.333333333333
  assert round_significant({"a": [2.0 / 3.0, 7], "b": True}) == {"a": [0.666666666667, 7], "b": True}
  assert round_significant(Scheme.TDMA) == "tdma"

def test_non_finite_floats_become_null():
  assert round_significant(math.nan) is None
  assert round_significant([math.inf, -math.inf, 1.5]) == [None, None, 1.5]

def test_write_json_is_strict():
  stream = io.StringIO()
  write_json({"rows": [{"energy": math.nan, "feasible_fraction": 0.0}]}, stream)
  text = stream.getvalue()
  assert "NaN" not in text
  payload = json.loads(text, parse_constant=reject_constant)
  assert payload == {"rows": [{"energy": None, "feasible_fraction": 0.0}]}

def reject_constant(token):
  raise AssertionError(f"non-standard JSON token {token}")

def test_format_cell():
  assert format_cell(256.0) == "256"
  assert format_cell(0.1 + 0.2) == "0.3"
  assert format_cell(None) == ""
  assert format_cell(math.nan) == ""
  assert format_cell(False) == "false"
  assert format_cell(Scheme.HYBRID) == "hybrid"

def test_write_csv_column_order():
  stream = io.StringIO()
  write_csv([{"b": 2, "a": 1.25, "extra": "x"}, {"a": math.nan, "b": 3}], ["a", "b"], stream)
  assert stream.getvalue() == "a,b\n1.25,2\n,3\n"
