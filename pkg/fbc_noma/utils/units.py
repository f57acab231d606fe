import math
import re
from typing import Union

_POWER_PATTERN = re.compile(r'^\s*([+-]?(?:inf|infinity|[0-9]*\.?[0-9]+(?:e[+-]?[0-9]+)?))\s*(dbm|w)?\s*$', re.IGNORECASE)


def dbm_to_watts(dbm: float) -> float:
    """Convert a power level in dBm to watts, P = 10^((dBm - 30)/10)."""
    if math.isinf(dbm) and dbm < 0:
        return 0.0
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def parse_power(value: Union[str, float, int]) -> float:
    """Parse a power value to watts.

    Numbers are taken as watts. Strings need an explicit unit suffix,
    e.g. "10W", "40dBm" or "-inf dBm".

    Args:
        value (Union[str, float, int]): The power value.

    Returns:
        float: The power in watts.

    Raises:
        ValueError: If the value cannot be parsed or is negative.
    """
    if isinstance(value, bool):
        raise ValueError(f"Invalid power: {value}")
    if isinstance(value, (int, float)):
        watts = float(value)
    else:
        match = _POWER_PATTERN.match(str(value))
        if not match or not match.group(2):
            raise ValueError(f"Invalid power: {value!r} (expected a number with 'W' or 'dBm' suffix)")
        number = float(match.group(1))
        watts = dbm_to_watts(number) if match.group(2).lower() == "dbm" else number
    if math.isnan(watts) or watts < 0.0:
        raise ValueError(f"Invalid power: {value}")
    return watts
