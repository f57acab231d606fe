import csv
import json
import math
from enum import Enum
from typing import Any, Dict, Iterable, List, TextIO

SIGNIFICANT_DIGITS = 12


def round_significant(value: Any, digits: int = SIGNIFICANT_DIGITS) -> Any:
    """Round every float of a JSON-like structure to `digits` significant digits.

    Args:
        value (Any): A float, or a dict/list/tuple holding floats.
        digits (int, optional): Significant digits. Defaults to 12.

    Returns:
        Any: The same structure with rounded floats; NaN and infinities become None.
    """
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return float(f"{value:.{digits}g}")
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {k: round_significant(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_significant(v, digits) for v in value]
    return value


def format_cell(value: Any, digits: int = SIGNIFICANT_DIGITS) -> str:
    """CSV text of one value; missing and non-finite values are empty cells."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if not math.isfinite(value):
            return ""
        return f"{value:.{digits}g}"
    if isinstance(value, Enum):
        return str(value.value)
    return str(value)


def write_json(payload: Dict[str, Any], stream: TextIO):
    """Write a result payload as indented JSON with rounded floats."""
    json.dump(round_significant(payload), stream, indent=2, allow_nan=False)
    stream.write("\n")


def write_csv(rows: Iterable[Dict[str, Any]], columns: List[str], stream: TextIO):
    """Write rows as CSV with one header row and a fixed column order.

    Args:
        rows (Iterable[Dict[str, Any]]): The rows; extra keys are ignored.
        columns (List[str]): Column order.
        stream (TextIO): Destination.
    """
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(row.get(column)) for column in columns])
