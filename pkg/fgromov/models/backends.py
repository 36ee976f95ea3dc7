"""Group backends: exact multiplication oracles with canonical element keys"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Hashable, List, Sequence, Tuple

from fgromov.models import intmatrix
from fgromov.models.enums import BackendKind
from fgromov.utils.errors import BackendMismatchError, ValidationError

Element = Hashable


def encode_int(n: int) -> bytes:
    """Length-prefixed two's-complement big-endian encoding"""
    length = (n.bit_length() + 8) // 8
    if length > 255:
        raise ValidationError(f"integer {n} too large for a canonical key")
    return bytes([length]) + n.to_bytes(length, "big", signed=True)


def encode_ints(values: Sequence[int]) -> bytes:
    return b"".join(encode_int(v) for v in values)


def decode_ints(key: bytes) -> List[int]:
    values = []
    pos = 0
    while pos < len(key):
        length = key[pos]
        chunk = key[pos + 1:pos + 1 + length]
        if length == 0 or len(chunk) != length:
            raise ValidationError(f"corrupt canonical key {key.hex()}")
        values.append(int.from_bytes(chunk, "big", signed=True))
        pos += 1 + length
    return values


class GroupBackend(ABC):
    """A group given by an executable multiplication oracle.

    Backends are immutable value objects. `mul` and `inv` are the unchecked fast
    paths used by enumeration loops; `multiply` and `inverse` validate their
    arguments first.
    """

    kind: BackendKind

    @abstractmethod
    def identity(self) -> Element: ...

    @abstractmethod
    def mul(self, g: Element, h: Element) -> Element: ...

    @abstractmethod
    def inv(self, g: Element) -> Element: ...

    @abstractmethod
    def is_element(self, g: Any) -> bool: ...

    @abstractmethod
    def canonical_key(self, g: Element) -> bytes: ...

    @abstractmethod
    def decode_key(self, key: bytes) -> Element: ...

    @abstractmethod
    def describe(self) -> Dict[str, Any]:
        """Parameters identifying the backend (fingerprints, spec emission)"""

    @abstractmethod
    def coordinates(self, g: Element) -> Tuple[float, ...]:
        """Normal-form coordinates of an element as a real vector"""

    @abstractmethod
    def from_row(self, row: Sequence[int]) -> Element:
        """Build an element from a flat row of integers (spec file generator rows)"""

    @abstractmethod
    def to_row(self, g: Element) -> List[int]: ...

    def validate(self, g: Any) -> Element:
        if not self.is_element(g):
            raise BackendMismatchError(self.kind.value, g)
        return g

    def multiply(self, g: Element, h: Element) -> Element:
        return self.mul(self.validate(g), self.validate(h))

    def inverse(self, g: Element) -> Element:
        return self.inv(self.validate(g))

    def is_identity(self, g: Element) -> bool:
        return g == self.identity()

    def commutator(self, g: Element, h: Element) -> Element:
        """[g, h] = g h g^-1 h^-1"""
        return self.mul(self.mul(g, h), self.mul(self.inv(g), self.inv(h)))

    def power(self, g: Element, n: int) -> Element:
        if n < 0:
            g, n = self.inv(g), -n
        result = self.identity()
        base = g
        while n:
            if n & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            n >>= 1
        return result

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GroupBackend) and self.describe() == other.describe()

    def __hash__(self) -> int:
        return hash(repr(self.describe()))


class CyclicBackend(GroupBackend):
    """Z/N with elements 0..N-1"""

    kind = BackendKind.CYCLIC

    def __init__(self, modulus: int):
        if modulus < 1:
            raise ValidationError(f"cyclic modulus must be positive, got {modulus}")
        self.modulus = modulus

    def identity(self) -> int:
        return 0

    def mul(self, g: int, h: int) -> int:
        return (g + h) % self.modulus

    def inv(self, g: int) -> int:
        return (-g) % self.modulus

    def is_element(self, g: Any) -> bool:
        return isinstance(g, int) and not isinstance(g, bool) and 0 <= g < self.modulus

    def canonical_key(self, g: int) -> bytes:
        return encode_int(g)

    def decode_key(self, key: bytes) -> int:
        return self.validate(decode_ints(key)[0])

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "modulus": self.modulus}

    def coordinates(self, g: int) -> Tuple[float, ...]:
        # centred representative
        return (float(g if g <= self.modulus // 2 else g - self.modulus),)

    def from_row(self, row: Sequence[int]) -> int:
        if len(row) != 1:
            raise ValidationError(f"cyclic generator needs 1 integer, got {len(row)}")
        return int(row[0]) % self.modulus

    def to_row(self, g: int) -> List[int]:
        return [g]


class AbelianBackend(GroupBackend):
    """Z^a x Z/m_1 x ... with one modulus per coordinate (0 = free factor)"""

    kind = BackendKind.ABELIAN

    def __init__(self, moduli: Sequence[int]):
        if not moduli or any(m < 0 for m in moduli):
            raise ValidationError(f"invalid abelian moduli {list(moduli)}")
        self.moduli = tuple(int(m) for m in moduli)
        self.rank = len(self.moduli)

    def _reduce(self, values: Sequence[int]) -> Tuple[int, ...]:
        return tuple(v % m if m else v for v, m in zip(values, self.moduli))

    def identity(self) -> Tuple[int, ...]:
        return (0,) * self.rank

    def mul(self, g, h):
        return self._reduce([a + b for a, b in zip(g, h)])

    def inv(self, g):
        return self._reduce([-a for a in g])

    def is_element(self, g: Any) -> bool:
        return (
            isinstance(g, tuple)
            and len(g) == self.rank
            and all(isinstance(a, int) for a in g)
            and self._reduce(g) == g
        )

    def canonical_key(self, g) -> bytes:
        return encode_ints(g)

    def decode_key(self, key: bytes):
        return self.validate(tuple(decode_ints(key)))

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "moduli": list(self.moduli)}

    def coordinates(self, g) -> Tuple[float, ...]:
        return tuple(float(a if not m or a <= m // 2 else a - m) for a, m in zip(g, self.moduli))

    def from_row(self, row: Sequence[int]):
        if len(row) != self.rank:
            raise ValidationError(f"abelian generator needs {self.rank} integers, got {len(row)}")
        return self._reduce([int(a) for a in row])

    def to_row(self, g) -> List[int]:
        return list(g)


class FreeAbelianBackend(AbelianBackend):
    """Z^D"""

    kind = BackendKind.FREE_ABELIAN

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ValidationError(f"dimension must be positive, got {dimension}")
        super().__init__([0] * dimension)
        self.dimension = dimension

    def mul(self, g, h):
        return tuple(a + b for a, b in zip(g, h))

    def inv(self, g):
        return tuple(-a for a in g)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "dimension": self.dimension}


class IntegerMatrixBackend(GroupBackend):
    """Subgroups of GL_D(Z); elements are row-major flat tuples"""

    kind = BackendKind.INTEGER_MATRIX

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ValidationError(f"dimension must be positive, got {dimension}")
        self.dimension = dimension

    def identity(self) -> Tuple[int, ...]:
        d = self.dimension
        return tuple(1 if i % (d + 1) == 0 else 0 for i in range(d * d))

    def mul(self, g, h):
        d = self.dimension
        return tuple(
            sum(g[i * d + k] * h[k * d + j] for k in range(d))
            for i in range(d)
            for j in range(d)
        )

    def inv(self, g):
        return self.flatten(intmatrix.inverse(self.rows(g)))

    def rows(self, g) -> intmatrix.IntMatrix:
        d = self.dimension
        return tuple(tuple(g[i * d:(i + 1) * d]) for i in range(d))

    @staticmethod
    def flatten(rows: intmatrix.IntMatrix) -> Tuple[int, ...]:
        return tuple(x for row in rows for x in row)

    def _has_shape(self, g: Any) -> bool:
        return (
            isinstance(g, tuple)
            and len(g) == self.dimension ** 2
            and all(isinstance(a, int) and not isinstance(a, bool) for a in g)
        )

    def is_element(self, g: Any) -> bool:
        return self._has_shape(g) and abs(intmatrix.determinant(self.rows(g))) == 1

    def canonical_key(self, g) -> bytes:
        return encode_ints(g)

    def decode_key(self, key: bytes):
        # keys are only ever written for products of unimodular generators
        g = tuple(decode_ints(key))
        if not self._has_shape(g):
            raise BackendMismatchError(self.kind.value, g)
        return g

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "dimension": self.dimension}

    def coordinates(self, g) -> Tuple[float, ...]:
        return tuple(float(a) for a in g)

    def from_row(self, row: Sequence[int]):
        if len(row) != self.dimension ** 2:
            raise ValidationError(
                f"matrix generator needs {self.dimension ** 2} integers, got {len(row)}"
            )
        g = tuple(int(a) for a in row)
        if abs(intmatrix.determinant(self.rows(g))) != 1:
            raise ValidationError(f"matrix generator {list(row)} is not invertible over Z")
        return g

    def to_row(self, g) -> List[int]:
        return list(g)


class SemidirectBackend(GroupBackend):
    """Z semidirect Z^D with t acting by T: (n, v)(m, w) = (n + m, v + T^n w)"""

    kind = BackendKind.SEMIDIRECT

    def __init__(self, matrix: Sequence[Sequence[int]]):
        self.matrix = intmatrix.as_int_matrix(matrix)
        self.dimension = len(self.matrix)
        if abs(intmatrix.determinant(self.matrix)) != 1:
            raise ValidationError("semidirect matrix must have determinant +-1")
        self._inverse = intmatrix.inverse(self.matrix)
        self._powers: Dict[int, intmatrix.IntMatrix] = {0: intmatrix.identity(self.dimension)}

    def matrix_power(self, n: int) -> intmatrix.IntMatrix:
        cached = self._powers.get(n)
        if cached is None:
            cached = intmatrix.power(self.matrix if n > 0 else self._inverse, abs(n))
            self._powers[n] = cached
        return cached

    def identity(self):
        return (0, (0,) * self.dimension)

    def mul(self, g, h):
        n, v = g
        m, w = h
        tw = intmatrix.mat_vec(self.matrix_power(n), w) if n else w
        return (n + m, tuple(a + b for a, b in zip(v, tw)))

    def inv(self, g):
        n, v = g
        back = intmatrix.mat_vec(self.matrix_power(-n), v) if n else v
        return (-n, tuple(-a for a in back))

    def is_element(self, g: Any) -> bool:
        return (
            isinstance(g, tuple)
            and len(g) == 2
            and isinstance(g[0], int)
            and isinstance(g[1], tuple)
            and len(g[1]) == self.dimension
            and all(isinstance(a, int) for a in g[1])
        )

    def in_lattice(self, g) -> bool:
        """Membership in the normal subgroup Z^D"""
        return g[0] == 0

    def canonical_key(self, g) -> bytes:
        return encode_ints((g[0],) + g[1])

    def decode_key(self, key: bytes):
        values = decode_ints(key)
        return self.validate((values[0], tuple(values[1:])))

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "matrix": [list(r) for r in self.matrix]}

    def coordinates(self, g) -> Tuple[float, ...]:
        return (float(g[0]),) + tuple(float(a) for a in g[1])

    def from_row(self, row: Sequence[int]):
        if len(row) != self.dimension + 1:
            raise ValidationError(
                f"semidirect generator needs {self.dimension + 1} integers, got {len(row)}"
            )
        return (int(row[0]), tuple(int(a) for a in row[1:]))

    def to_row(self, g) -> List[int]:
        return [g[0], *g[1]]


class LamplighterBackend(GroupBackend):
    """Z/2 wreath Z; state = (sorted lit lamps, cursor)"""

    kind = BackendKind.LAMPLIGHTER

    def identity(self):
        return ((), 0)

    def mul(self, g, h):
        lamps, a = g
        other, b = h
        shifted = {x + a for x in other}
        return (tuple(sorted(set(lamps).symmetric_difference(shifted))), a + b)

    def inv(self, g):
        lamps, a = g
        return (tuple(x - a for x in lamps), -a)

    def is_element(self, g: Any) -> bool:
        return (
            isinstance(g, tuple)
            and len(g) == 2
            and isinstance(g[0], tuple)
            and isinstance(g[1], int)
            and list(g[0]) == sorted(set(g[0]))
        )

    def canonical_key(self, g) -> bytes:
        return encode_ints((g[1], len(g[0])) + g[0])

    def decode_key(self, key: bytes):
        values = decode_ints(key)
        return self.validate((tuple(values[2:]), values[0]))

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind.value}

    def coordinates(self, g) -> Tuple[float, ...]:
        return (float(g[1]), float(len(g[0])))

    def from_row(self, row: Sequence[int]):
        # cursor followed by lit lamp positions
        if not row:
            raise ValidationError("lamplighter generator needs at least a cursor")
        lamps = [int(x) for x in row[1:]]
        if len(set(lamps)) != len(lamps):
            raise ValidationError(f"lamplighter generator {list(row)} repeats a lamp")
        return (tuple(sorted(lamps)), int(row[0]))

    def to_row(self, g) -> List[int]:
        return [g[1], *g[0]]


class FreeGroupBackend(GroupBackend):
    """Free group on k letters; reduced words over +-1..+-k"""

    kind = BackendKind.FREE_GROUP

    def __init__(self, rank: int):
        if rank < 1:
            raise ValidationError(f"rank must be positive, got {rank}")
        self.rank = rank

    def identity(self):
        return ()

    def mul(self, g, h):
        # cancel across the seam
        i = 0
        limit = min(len(g), len(h))
        while i < limit and g[len(g) - 1 - i] == -h[i]:
            i += 1
        return g[:len(g) - i] + h[i:]

    def inv(self, g):
        return tuple(-a for a in reversed(g))

    def is_element(self, g: Any) -> bool:
        if not isinstance(g, tuple) or not all(isinstance(a, int) and 0 < abs(a) <= self.rank for a in g):
            return False
        return all(g[i] != -g[i + 1] for i in range(len(g) - 1))

    def canonical_key(self, g) -> bytes:
        return encode_ints(g)

    def decode_key(self, key: bytes):
        return self.validate(tuple(decode_ints(key)))

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "rank": self.rank}

    def coordinates(self, g) -> Tuple[float, ...]:
        # abelianization
        counts = [0.0] * self.rank
        for a in g:
            counts[abs(a) - 1] += 1.0 if a > 0 else -1.0
        return tuple(counts)

    def from_row(self, row: Sequence[int]):
        word = ()
        for a in row:
            a = int(a)
            if a == 0 or abs(a) > self.rank:
                raise ValidationError(f"letter {a} outside free group of rank {self.rank}")
            word = self.mul(word, (a,))
        return word

    def to_row(self, g) -> List[int]:
        return list(g)
