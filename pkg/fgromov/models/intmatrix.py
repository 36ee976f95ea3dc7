"""Exact integer matrices as tuples of rows"""

from fractions import Fraction
from typing import List, Sequence, Tuple

import sympy

from fgromov.utils.errors import PreconditionError, ValidationError

IntMatrix = Tuple[Tuple[int, ...], ...]
IntVector = Tuple[int, ...]


def as_int_matrix(rows: Sequence[Sequence[int]]) -> IntMatrix:
    """Validate a square array of Python integers and freeze it"""
    matrix = tuple(tuple(int(x) for x in row) for row in rows)
    size = len(matrix)
    if size == 0 or any(len(row) != size for row in matrix):
        raise ValidationError(f"matrix must be square and non-empty, got {len(matrix)} rows")
    for row, original in zip(matrix, rows):
        for x, y in zip(row, original):
            if x != y:
                raise ValidationError(f"matrix entry {y!r} is not an integer")
    return matrix


def identity(size: int) -> IntMatrix:
    return tuple(tuple(1 if i == j else 0 for j in range(size)) for i in range(size))


def mat_mul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    cols = list(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in cols) for row in a)


def mat_vec(a: IntMatrix, v: Sequence[int]) -> IntVector:
    return tuple(sum(x * y for x, y in zip(row, v)) for row in a)


def mat_sub(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def is_zero(a: IntMatrix) -> bool:
    return all(x == 0 for row in a for x in row)


def determinant(a: IntMatrix) -> int:
    return int(sympy.Matrix(a).det(method="bareiss"))


def inverse(a: IntMatrix) -> IntMatrix:
    """Exact inverse of a unimodular matrix by Gauss-Jordan over the rationals"""
    size = len(a)
    work: List[List[Fraction]] = [
        [Fraction(x) for x in row] + [Fraction(1 if i == j else 0) for j in range(size)]
        for i, row in enumerate(a)
    ]
    for col in range(size):
        pivot = next((r for r in range(col, size) if work[r][col] != 0), None)
        if pivot is None:
            raise PreconditionError("matrix is singular")
        work[col], work[pivot] = work[pivot], work[col]
        lead = work[col][col]
        work[col] = [x / lead for x in work[col]]
        for r in range(size):
            if r != col and work[r][col] != 0:
                factor = work[r][col]
                work[r] = [x - factor * y for x, y in zip(work[r], work[col])]
    result = []
    for row in work:
        tail = row[size:]
        if any(x.denominator != 1 for x in tail):
            raise PreconditionError("matrix is not invertible over the integers")
        result.append(tuple(int(x) for x in tail))
    return tuple(result)


def power(a: IntMatrix, n: int) -> IntMatrix:
    """a**n by repeated squaring; negative n uses the exact inverse"""
    if n < 0:
        a, n = inverse(a), -n
    result = identity(len(a))
    base = a
    while n:
        if n & 1:
            result = mat_mul(result, base)
        base = mat_mul(base, base)
        n >>= 1
    return result


def block_diagonal(*blocks: IntMatrix) -> IntMatrix:
    size = sum(len(b) for b in blocks)
    rows: List[Tuple[int, ...]] = []
    offset = 0
    for block in blocks:
        for row in block:
            rows.append((0,) * offset + tuple(row) + (0,) * (size - offset - len(block)))
        offset += len(block)
    return tuple(rows)


def companion(coeffs: Sequence[int]) -> IntMatrix:
    """Companion matrix of a monic polynomial given highest degree first"""
    if not coeffs or coeffs[0] != 1:
        raise ValidationError("companion matrix needs a monic polynomial")
    degree = len(coeffs) - 1
    rows = []
    for i in range(degree):
        row = [0] * degree
        if i > 0:
            row[i - 1] = 1
        row[-1] = -coeffs[degree - i]
        rows.append(tuple(row))
    return tuple(rows)
