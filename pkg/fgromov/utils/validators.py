"""Validation utilities"""

import re
from typing import List, Optional, Sequence

INTEGER = re.compile(r'^[+-]?\d+$')


def validate_integer_row(tokens: Sequence[str]) -> tuple[bool, Optional[str]]:
    """Whitespace-separated integers, at least one"""

    if not tokens:
        return False, "row is empty"

    bad = [t for t in tokens if not INTEGER.match(t)]
    if bad:
        return False, f"not an integer: {bad[0]!r}"

    return True, None


def validate_square(rows: Sequence[Sequence[int]]) -> tuple[bool, Optional[str]]:
    if not rows:
        return False, "matrix has no rows"

    n = len(rows)
    for i, row in enumerate(rows):
        if len(row) != n:
            return False, f"row {i + 1} has {len(row)} entries, expected {n}"

    return True, None


def validate_radius(radius: int, minimum: int = 0) -> tuple[bool, Optional[str]]:
    if radius < minimum:
        return False, f"radius must be at least {minimum}, got {radius}"
    return True, None


def parse_int_list(text: str) -> List[int]:
    """'1,2, 4' -> [1, 2, 4]"""
    tokens = [t.strip() for t in text.split(",") if t.strip()]
    valid, message = validate_integer_row(tokens)
    if not valid:
        raise ValueError(message)
    return [int(t) for t in tokens]
