"""Enumerated Cayley balls"""

import hashlib
from typing import Dict, List, Optional, Sequence

import numpy as np

from fgromov.models.backends import Element
from fgromov.models.group import MarkedGroup
from fgromov.utils.errors import SupportEscapeError


class Ball:
    """The exact ball B_S(R), ordered by (word norm, canonical key).

    Immutable once built. Because of the ordering, the ball of any smaller
    radius is a prefix of this one; `sub_ball` shares the parent's storage.
    """

    def __init__(
        self,
        group: MarkedGroup,
        radius: int,
        elements: List[Element],
        keys: List[bytes],
        sphere_sizes: List[int],
    ):
        self.group = group
        self.radius = radius
        self.elements = elements
        self.keys = keys
        self.sphere_sizes = sphere_sizes
        self.norms = np.repeat(np.arange(len(sphere_sizes)), sphere_sizes)
        self.index: Dict[Element, int] = {g: i for i, g in enumerate(elements)}
        self._neighbours: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, g: Element) -> bool:
        return g in self.index

    @property
    def cumulative_sizes(self) -> List[int]:
        return list(np.cumsum(self.sphere_sizes))

    @property
    def is_whole_group(self) -> bool:
        """True when the ball is closed under right multiplication by S"""
        return bool((self.neighbour_table() >= 0).all())

    def position(self, g: Element) -> Optional[int]:
        return self.index.get(g)

    def norm_of(self, g: Element) -> Optional[int]:
        pos = self.index.get(g)
        return None if pos is None else int(self.norms[pos])

    def size_at(self, r: int) -> int:
        """|B_S(r)| for r <= radius"""
        return int(sum(self.sphere_sizes[: r + 1]))

    def sub_ball(self, r: int) -> "Ball":
        if r >= self.radius:
            return self
        r = max(r, 0)
        count = self.size_at(r)
        sub = Ball.__new__(Ball)
        sub.group = self.group
        sub.radius = r
        sub.elements = self.elements[:count]
        sub.keys = self.keys[:count]
        sub.sphere_sizes = self.sphere_sizes[: r + 1]
        sub.norms = self.norms[:count]
        sub.index = {g: i for i, g in enumerate(sub.elements)}
        table = self.neighbour_table()[:count].copy()
        table[table >= count] = -1
        sub._neighbours = table
        return sub

    def neighbour_table(self) -> np.ndarray:
        """nbr[i, s] = position of elements[i] * S[s], or -1 outside the ball"""
        if self._neighbours is None:
            mul = self.group.mul
            index = self.index
            table = np.full((len(self.elements), self.group.size), -1, dtype=np.int64)
            for i, g in enumerate(self.elements):
                for j, s in enumerate(self.group.generators):
                    table[i, j] = index.get(mul(g, s), -1)
            self._neighbours = table
        return self._neighbours

    def translate_positions(self, x: Element, targets: "Ball") -> np.ndarray:
        """Positions in `targets` of x*b for every b in this ball"""
        mul = self.group.mul
        positions = np.fromiter(
            (targets.index.get(mul(x, b), -1) for b in self.elements),
            dtype=np.int64,
            count=len(self.elements),
        )
        if (positions < 0).any():
            raise SupportEscapeError(
                f"translate of B({self.radius}) leaves the ball of radius {targets.radius}"
            )
        return positions

    def positions_of(self, elements: Sequence[Element]) -> np.ndarray:
        out = np.empty(len(elements), dtype=np.int64)
        for i, g in enumerate(elements):
            pos = self.index.get(g)
            if pos is None:
                raise SupportEscapeError(f"element {g!r} outside the ball of radius {self.radius}")
            out[i] = pos
        return out

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.group.fingerprint().encode("ascii"))
        h.update(self.radius.to_bytes(4, "big"))
        for key in self.keys:
            h.update(len(key).to_bytes(4, "big"))
            h.update(key)
        return h.hexdigest()

    def __repr__(self) -> str:
        return f"Ball({self.group.name!r}, R={self.radius}, size={len(self)})"
