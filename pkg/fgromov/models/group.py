"""Marked groups: a backend plus a finite symmetric generating set"""

import hashlib
import json
import logging
from typing import Any, Dict, List, Optional, Sequence

from fgromov.models.backends import Element, GroupBackend
from fgromov.utils.errors import ValidationError

logger = logging.getLogger(__name__)


class MarkedGroup:
    """A group backend with a generating set S.

    S is kept in the order given, with duplicates removed. Missing inverses are
    appended when `auto_close` is set (with a warning); otherwise an asymmetric
    S is rejected.
    """

    def __init__(
        self,
        backend: GroupBackend,
        generators: Sequence[Element],
        name: str = "group",
        auto_close: bool = True,
    ):
        if not generators:
            raise ValidationError("generating set must be non-empty")
        self.backend = backend
        self.name = name

        seen: Dict[bytes, Element] = {}
        for g in generators:
            backend.validate(g)
            seen.setdefault(backend.canonical_key(g), g)
        self.base_generators: List[Element] = list(seen.values())

        closed = dict(seen)
        missing = []
        for g in self.base_generators:
            g_inv = backend.inv(g)
            key = backend.canonical_key(g_inv)
            if key not in closed:
                closed[key] = g_inv
                missing.append(g_inv)
        if missing:
            if not auto_close:
                raise ValidationError(f"generating set of {name} is not symmetric")
            logger.warning(f"{name}: closed generating set under inversion, added {len(missing)} elements")

        self.generators: List[Element] = list(closed.values())
        self.identity = backend.identity()
        self.identity_in_generators = any(backend.is_identity(s) for s in self.generators)

        keys = [backend.canonical_key(s) for s in self.generators]
        position = {k: i for i, k in enumerate(keys)}
        self.inverse_index: List[int] = [
            position[backend.canonical_key(backend.inv(s))] for s in self.generators
        ]

    @property
    def size(self) -> int:
        """|S|"""
        return len(self.generators)

    def mul(self, g: Element, h: Element) -> Element:
        return self.backend.mul(g, h)

    def inv(self, g: Element) -> Element:
        return self.backend.inv(g)

    def key(self, g: Element) -> bytes:
        return self.backend.canonical_key(g)

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "backend": self.backend.describe(),
            "generators": [self.backend.to_row(s) for s in self.generators],
        }

    def fingerprint(self) -> str:
        """Content hash of the backend parameters and the generating set"""
        payload = {
            "backend": self.backend.describe(),
            "generators": [self.key(s).hex() for s in self.generators],
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()

    def remark(self, generators: Sequence[Element], name: Optional[str] = None) -> "MarkedGroup":
        """The same backend with a different generating set (a subgroup marking)"""
        return MarkedGroup(self.backend, generators, name=name or f"{self.name}'", auto_close=True)

    def __repr__(self) -> str:
        return f"MarkedGroup({self.name!r}, {self.backend.kind.value}, |S|={self.size})"
