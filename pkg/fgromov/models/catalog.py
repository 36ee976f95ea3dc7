"""Standard marked groups used by fixtures, tests and experiments"""

from typing import Sequence

from fgromov.models import intmatrix
from fgromov.models.backends import (
    AbelianBackend,
    CyclicBackend,
    FreeAbelianBackend,
    FreeGroupBackend,
    IntegerMatrixBackend,
    LamplighterBackend,
    SemidirectBackend,
)
from fgromov.models.group import MarkedGroup

SHEAR = ((1, 1), (0, 1))
CAT_MAP = ((2, 1), (1, 1))
ROTATION = ((0, -1), (1, 0))


def cyclic(modulus: int, step: int = 1) -> MarkedGroup:
    backend = CyclicBackend(modulus)
    return MarkedGroup(backend, [step % modulus], name=f"Z/{modulus}")


def free_abelian(dimension: int) -> MarkedGroup:
    backend = FreeAbelianBackend(dimension)
    basis = [tuple(1 if i == j else 0 for j in range(dimension)) for i in range(dimension)]
    return MarkedGroup(backend, basis, name=f"Z^{dimension}")


def abelian(moduli: Sequence[int], generators: Sequence[Sequence[int]]) -> MarkedGroup:
    backend = AbelianBackend(moduli)
    name = " x ".join("Z" if m == 0 else f"Z/{m}" for m in moduli)
    return MarkedGroup(backend, [backend.from_row(g) for g in generators], name=name)


def heisenberg() -> MarkedGroup:
    """Upper unitriangular 3x3 integer matrices with the elementary generators x, z"""
    backend = IntegerMatrixBackend(3)
    x = (1, 1, 0, 0, 1, 0, 0, 0, 1)
    z = (1, 0, 0, 0, 1, 1, 0, 0, 1)
    return MarkedGroup(backend, [x, z], name="heisenberg")


def heisenberg_center_generator() -> tuple:
    return (1, 0, 1, 0, 1, 0, 0, 0, 1)


def semidirect(matrix: intmatrix.IntMatrix, name: str = "semidirect") -> MarkedGroup:
    """Z semidirect Z^D with the standard generators t and e_i"""
    backend = SemidirectBackend(matrix)
    d = backend.dimension
    t = (1, (0,) * d)
    basis = [(0, tuple(1 if i == j else 0 for j in range(d))) for i in range(d)]
    return MarkedGroup(backend, [t, *basis], name=name)


def lamplighter() -> MarkedGroup:
    backend = LamplighterBackend()
    return MarkedGroup(backend, [((), 1), ((0,), 0)], name="lamplighter")


def free_group(rank: int) -> MarkedGroup:
    backend = FreeGroupBackend(rank)
    return MarkedGroup(backend, [(i,) for i in range(1, rank + 1)], name=f"F{rank}")


def rotation_lattice() -> MarkedGroup:
    """Z^2 extended by a quarter turn, as affine 3x3 integer matrices.

    Virtually abelian with a non-trivial finite image in GL_2, which is the
    smallest place where the box principle has more than one cell to find.
    """
    backend = IntegerMatrixBackend(3)
    r = (0, -1, 0, 1, 0, 0, 0, 0, 1)
    a = (1, 0, 1, 0, 1, 0, 0, 0, 1)
    b = (1, 0, 0, 0, 1, 1, 0, 0, 1)
    return MarkedGroup(backend, [r, a, b], name="rotation-lattice")
