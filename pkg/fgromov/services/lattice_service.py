"""Exact integer-lattice dynamics: the periodicity/growth dichotomy and unipotent towers"""

import logging
import math
from fractions import Fraction
from functools import reduce
from typing import List, Optional, Sequence, Tuple

import numpy as np
import sympy
from sympy.matrices.normalforms import hermite_normal_form

from fgromov.config import settings
from fgromov.models import intmatrix
from fgromov.models.enums import DichotomyBranch
from fgromov.models.intmatrix import IntMatrix, IntVector
from fgromov.schemas.dichotomy import DichotomyResult, UnipotentTower
from fgromov.utils.errors import (
    GrowthWitnessError,
    InternalError,
    KroneckerViolationError,
    PreconditionError,
)
from fgromov.utils.timer import timer

logger = logging.getLogger(__name__)

x = sympy.Symbol("x")

NEWTON_STEPS = 8
DEFAULT_GROWTH_STEPS = 20


def char_poly(T: Sequence[Sequence[int]]) -> List[int]:
    """det(xI - T), highest degree first"""
    return [int(c) for c in sympy.Matrix(T).charpoly(x).all_coeffs()]


def _poly(coeffs: Sequence[int]) -> sympy.Poly:
    return sympy.Poly(list(coeffs), x)


def _require_unimodular(T: IntMatrix) -> None:
    det = intmatrix.determinant(T)
    if abs(det) != 1:
        raise PreconditionError(f"matrix must have determinant +-1, got {det}")


def totient_candidates(D: int) -> List[int]:
    """Every n with phi(n) <= D; phi(n) >= sqrt(n/2) bounds the search by 2 D^2"""
    return [n for n in range(1, 2 * D * D + 1) if sympy.totient(n) <= D]


def integer_kernel(M: Sequence[Sequence[int]]) -> List[IntVector]:
    """Primitive integer basis of the rational kernel, first nonzero entry positive"""
    basis = []
    for vec in sympy.Matrix(M).nullspace():
        scale = reduce(sympy.ilcm, [sympy.fraction(v)[1] for v in vec], 1)
        ints = [int(v * scale) for v in vec]
        g = reduce(math.gcd, ints)
        ints = [a // g for a in ints]
        if next(a for a in ints if a) < 0:
            ints = [-a for a in ints]
        basis.append(tuple(ints))
    return basis


def lattice_image(M: Sequence[Sequence[int]], B: Sequence[Sequence[int]]) -> List[List[int]]:
    """Hermite basis (as a column list) of the lattice spanned by the columns of M·B"""
    A = sympy.Matrix(M) * sympy.Matrix(B)
    if A.is_zero_matrix:
        return []
    H = hermite_normal_form(A)
    columns = [list(map(int, H.col(j))) for j in range(H.cols) if any(H.col(j))]
    if len(columns) != A.rank():
        raise InternalError("Hermite basis has the wrong rank", details={"columns": columns})
    return columns


def restrict_to_lattice(T: Sequence[Sequence[int]], columns: Sequence[Sequence[int]]) -> IntMatrix:
    """The integer matrix M with B·M = T·B for the basis B of an invariant sublattice"""
    B = sympy.Matrix(columns).T
    TB = sympy.Matrix(T) * B
    M = (B.T * B).inv() * B.T * TB
    if any(not entry.is_integer for entry in M) or B * M != TB:
        raise PreconditionError("sublattice is not invariant under T")
    return intmatrix.as_int_matrix([[int(a) for a in M.row(i)] for i in range(M.rows)])


def cyclotomic_periodicity(T: Sequence[Sequence[int]]) -> Optional[DichotomyResult]:
    """Minimal n with phi(n) <= D and T^n - I singular, with an integer fixed vector of T^n"""
    T = intmatrix.as_int_matrix(T)
    _require_unimodular(T)
    coeffs = char_poly(T)
    p = _poly(coeffs)
    D = len(T)
    for n in totient_candidates(D):
        if sympy.gcd(p, _poly([1] + [0] * (n - 1) + [-1])).degree() == 0:
            continue
        Tn = intmatrix.power(T, n)
        kernel = integer_kernel(intmatrix.mat_sub(Tn, intmatrix.identity(D)))
        if not kernel:
            raise InternalError(f"gcd with x^{n} - 1 is non-trivial but T^{n} - I is injective")
        w = kernel[0]
        if intmatrix.mat_vec(Tn, w) != w:
            raise InternalError(f"kernel vector {w} is not fixed by T^{n}")
        logger.debug(f"period {n} with fixed vector {w}")
        return DichotomyResult(branch=DichotomyBranch.PERIODIC, char_poly=coeffs, period=n, w=list(w))
    return None


def _refined_roots(coeffs: Sequence[int]) -> np.ndarray:
    c = np.array(coeffs, dtype=float)
    roots = np.roots(c).astype(complex)
    dc = np.polyder(c)
    for _ in range(NEWTON_STEPS):
        value = np.polyval(c, roots)
        slope = np.polyval(dc, roots)
        safe = np.abs(slope) > 1e-300
        step = np.where(safe, value / np.where(safe, slope, 1), 0)
        candidate = roots - step
        better = np.abs(np.polyval(c, candidate)) <= np.abs(value)
        roots = np.where(better, candidate, roots)
    return roots


def mahler_measure(coeffs: Sequence[int]) -> float:
    """|a_0| Π max(1, |root|); cyclotomic factors contribute exactly 1"""
    p = _poly(coeffs)
    if p.degree() <= 0:
        return float(abs(p.LC()))
    content, factors = p.factor_list()
    measure = float(abs(content))
    for factor, multiplicity in factors:
        if factor.degree() > 0 and factor.is_cyclotomic:
            continue
        lead = float(abs(factor.LC()))
        roots = _refined_roots([int(c) for c in factor.all_coeffs()])
        measure *= (lead * float(np.prod(np.maximum(1.0, np.abs(roots))))) ** multiplicity
    return measure


def dobrowolski_reference(D: int) -> float:
    """1 + (1/1200)(log log D / log D)^3, display only"""
    if D < 3:
        return 1.0
    return 1 + (math.log(math.log(D)) / math.log(D)) ** 3 / 1200


def _euclid(v: Sequence[int]) -> int:
    return sum(a * a for a in v)


def growth_witness(T: Sequence[Sequence[int]], N: int = DEFAULT_GROWTH_STEPS) -> Tuple[List[int], float]:
    """Integer vector near the dominant eigendirection and its exact rate (|T^N v|/|v|)^(1/N)"""
    T = intmatrix.as_int_matrix(T)
    if N < 1:
        raise PreconditionError("growth witness needs N >= 1")
    mahler = mahler_measure(char_poly(T))
    if mahler <= 1 + settings.MAHLER_GUARD:
        raise PreconditionError(f"Mahler measure {mahler:.12f} shows no expanding eigenvalue")
    values, vectors = np.linalg.eig(np.array(T, dtype=float))
    dominant = vectors[:, int(np.argmax(np.abs(values)))]
    part = dominant.real if np.linalg.norm(dominant.real) >= np.linalg.norm(dominant.imag) else dominant.imag
    part = part / np.abs(part).max()
    TN = intmatrix.power(T, N)
    rates = []
    for denominator in settings.RATIONAL_DENOMINATORS:
        fractions = [Fraction(float(a)).limit_denominator(denominator) for a in part]
        scale = math.lcm(*(f.denominator for f in fractions))
        v = [int(f * scale) for f in fractions]
        g = reduce(math.gcd, v)
        if g == 0:
            continue
        v = [a // g for a in v]
        image = intmatrix.mat_vec(TN, v)
        rate = math.exp((math.log(_euclid(image)) - math.log(_euclid(v))) / (2 * N))
        rates.append(rate)
        if rate >= 1 + settings.GROWTH_RATE_FLOOR:
            logger.debug(f"growth witness at denominator {denominator}: rate {rate:.6f}")
            return v, rate
        logger.warning(f"rounded eigenvector at denominator {denominator} grows only at rate {rate:.6f}")
    raise GrowthWitnessError(
        "rounded eigenvector does not grow at any precision", details={"rates": rates}
    )


@timer(logger=logger)
def dichotomy(T: Sequence[Sequence[int]], N: int = DEFAULT_GROWTH_STEPS) -> DichotomyResult:
    """Periodic when every eigenvalue is a root of unity, Growth otherwise"""
    T = intmatrix.as_int_matrix(T)
    _require_unimodular(T)
    coeffs = char_poly(T)
    D = len(T)
    _, factors = _poly(coeffs).factor_list()
    if all(f.is_cyclotomic for f, _ in factors if f.degree() > 0):
        periodic = cyclotomic_periodicity(T)
        if periodic is None:
            raise KroneckerViolationError("product of cyclotomics with no period", details={"char_poly": coeffs})
        periodic.dobrowolski_reference = dobrowolski_reference(D)
        logger.info(f"dichotomy: periodic with n={periodic.period}")
        return periodic

    lambda_max = float(np.abs(np.linalg.eigvals(np.array(T, dtype=float))).max())
    mahler = mahler_measure(coeffs)
    if lambda_max <= 1 + settings.MAHLER_GUARD:
        logger.error(f"non-cyclotomic {coeffs} with all eigenvalues on the unit disc")
        raise KroneckerViolationError(
            "no period and no expanding eigenvalue", details={"char_poly": coeffs, "lambda_max": lambda_max}
        )
    v, rate = growth_witness(T, N)
    logger.info(f"dichotomy: growth with lambda_max={lambda_max:.6f}, mahler={mahler:.6f}")
    return DichotomyResult(
        branch=DichotomyBranch.GROWTH,
        char_poly=coeffs,
        lambda_max=lambda_max,
        mahler=mahler,
        v=v,
        measured_rate=rate,
        steps=N,
        dobrowolski_reference=dobrowolski_reference(D),
    )


@timer(logger=logger)
def unipotent_tower(T: Sequence[Sequence[int]]) -> UnipotentTower:
    """Iterate L -> (T^p - I) L with p the period of T on L until L = 0.

    Stops early with polynomial=False when T acts on some L_i with an
    expanding eigenvalue.
    """
    T = intmatrix.as_int_matrix(T)
    _require_unimodular(T)
    D = len(T)
    basis: List[List[int]] = [list(row) for row in intmatrix.identity(D)]
    periods: List[int] = []
    ranks = [D]
    bases = [basis]
    while basis:
        restricted = restrict_to_lattice(T, basis)
        result = dichotomy(restricted)
        if result.branch == DichotomyBranch.GROWTH:
            logger.warning(f"tower stops at rank {len(basis)}: T grows exponentially there")
            return UnipotentTower(
                periods=periods,
                P=math.prod(periods),
                ranks=ranks,
                bases=bases,
                polynomial=False,
                growth=result,
            )
        p = result.period
        shift = intmatrix.mat_sub(intmatrix.power(T, p), intmatrix.identity(D))
        basis = lattice_image(shift, [list(col) for col in zip(*basis)])
        if len(basis) >= ranks[-1]:
            raise InternalError(f"rank did not drop at period {p}", details={"ranks": ranks})
        periods.append(p)
        ranks.append(len(basis))
        bases.append(basis)

    P = math.prod(periods)
    shift = intmatrix.mat_sub(intmatrix.power(T, P), intmatrix.identity(D))
    nilpotent = intmatrix.is_zero(intmatrix.power(shift, D))
    if not nilpotent:
        raise InternalError(f"(T^{P} - I)^{D} is not zero", details={"periods": periods})
    logger.info(f"unipotent tower: periods {periods}, P={P}, ranks {ranks}")
    return UnipotentTower(periods=periods, P=P, ranks=ranks, bases=bases, unipotent_verified=True)
