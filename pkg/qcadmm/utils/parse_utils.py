"""
Parsing helpers for command-line and request values.
"""
from typing import List, Sequence, Union

from ..errors import InvalidArgumentError


def parse_float_list(text: Union[str, float, int, Sequence]) -> List[float]:
    """
    Parse a comma-separated list of numbers.

    Args:
        text: "0,0.1,0.5", a single number, or an existing sequence

    Returns:
        List of floats (nonempty)
    """
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, str):
        items = [item.strip() for item in text.split(",") if item.strip()]
    else:
        items = list(text)
    try:
        values = [float(item) for item in items]
    except (TypeError, ValueError) as e:
        raise InvalidArgumentError(f"could not parse number list {text!r}: {e}") from e
    if not values:
        raise InvalidArgumentError("number list is empty")
    return values


def parse_int_list(text: Union[str, int, Sequence]) -> List[int]:
    """
    Parse integers given as "1,2,3", a range "1-50" (inclusive) or a mix "1-3,7".

    Returns:
        List of ints in the given order (nonempty)
    """
    if isinstance(text, int):
        return [text]
    if not isinstance(text, str):
        values = list(text)
        if not values or any(int(v) != v for v in values):
            raise InvalidArgumentError(f"expected a nonempty list of integers, got {text!r}")
        return [int(v) for v in values]

    values: List[int] = []
    for item in (part.strip() for part in text.split(",")):
        if not item:
            continue
        try:
            if "-" in item[1:]:
                split_at = item.index("-", 1)
                lo, hi = int(item[:split_at]), int(item[split_at + 1:])
            else:
                lo = hi = int(item)
        except ValueError as e:
            raise InvalidArgumentError(f"could not parse integer list {text!r}: {e}") from e
        if hi < lo:
            raise InvalidArgumentError(f"empty range {item!r}")
        values.extend(range(lo, hi + 1))
    if not values:
        raise InvalidArgumentError("integer list is empty")
    return values
