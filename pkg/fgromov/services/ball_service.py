"""Cayley ball enumeration and growth measurement"""

import logging
import math
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Tuple, Union

from fgromov.config import settings
from fgromov.models.backends import Element
from fgromov.models.ball import Ball
from fgromov.models.group import MarkedGroup
from fgromov.schemas.growth import DegreeEstimate, GrowthSequence
from fgromov.utils.errors import PreconditionError, ResourceLimitError
from fgromov.utils.timer import timer

logger = logging.getLogger(__name__)

Sphere = List[Tuple[bytes, Element]]


class BallService:
    """Exact BFS enumeration of B_S(R) under an element cap"""

    def __init__(self, element_cap: Optional[int] = None):
        self.element_cap = element_cap or settings.BALL_ELEMENT_CAP

    def _spheres(self, group: MarkedGroup, radius: int) -> Iterator[Sphere]:
        """Yield the spheres S(0), S(1), ... each sorted by canonical key"""
        backend = group.backend
        identity = group.identity
        seen = {identity}
        sphere: Sphere = [(backend.canonical_key(identity), identity)]
        total = 1
        yield sphere
        for r in range(1, radius + 1):
            fresh: Dict[Element, bytes] = {}
            for _, g in sphere:
                for s in group.generators:
                    h = backend.mul(g, s)
                    if h not in seen and h not in fresh:
                        fresh[h] = backend.canonical_key(h)
            total += len(fresh)
            if total > self.element_cap:
                logger.error(f"{group.name}: ball of radius {r} exceeds {self.element_cap} elements")
                raise ResourceLimitError(
                    f"ball B({r}) of {group.name}",
                    self.element_cap,
                    details={"radius": r, "elements": total},
                )
            seen.update(fresh)
            sphere = sorted(((key, h) for h, key in fresh.items()), key=lambda item: item[0])
            yield sphere

    @timer(logger=logger)
    def enumerate_ball(self, group: MarkedGroup, radius: int) -> Ball:
        if radius < 0:
            raise PreconditionError(f"radius must be non-negative, got {radius}")
        elements: List[Element] = []
        keys: List[bytes] = []
        sphere_sizes: List[int] = []
        for sphere in self._spheres(group, radius):
            sphere_sizes.append(len(sphere))
            for key, g in sphere:
                keys.append(key)
                elements.append(g)
        logger.info(f"{group.name}: |B({radius})| = {len(elements)}")
        return Ball(group, radius, elements, keys, sphere_sizes)

    def word_norm(self, group: MarkedGroup, g: Element, r_max: int) -> Optional[int]:
        """Exact ||g||_S if at most r_max, else None"""
        if r_max < 0:
            raise PreconditionError(f"radius must be non-negative, got {r_max}")
        group.backend.validate(g)
        for r, sphere in enumerate(self._spheres(group, r_max)):
            if any(h == g for _, h in sphere):
                return r
            if not sphere:
                break
        return None

    def growth_sequence(self, group: MarkedGroup, r_max: int) -> GrowthSequence:
        ball = self.enumerate_ball(group, r_max)
        return sequence_from_ball(ball)


def sequence_from_ball(ball: Ball) -> GrowthSequence:
    return GrowthSequence(fingerprint=ball.group.fingerprint(), sizes=ball.cumulative_sizes)


def _as_fraction(d: Union[int, float, Fraction]) -> Fraction:
    if isinstance(d, float):
        return Fraction(str(d))
    return Fraction(d)


def is_growth_group(seq: GrowthSequence, r0: int, d: Union[int, float, Fraction]) -> bool:
    """|B_S(R_0)| <= R_0^d, compared exactly"""
    if r0 < 1 or r0 > seq.radius:
        raise PreconditionError(f"R_0={r0} outside the measured range 1..{seq.radius}")
    exponent = _as_fraction(d)
    if exponent < 0:
        raise PreconditionError(f"growth degree must be non-negative, got {d}")
    # size <= r0^(p/q)  <=>  size^q <= r0^p
    return seq.sizes[r0] ** exponent.denominator <= r0 ** exponent.numerator


def detect_finite(seq: GrowthSequence) -> Optional[int]:
    """Smallest r with |B(r)| = |B(r+1)|; the ball is then the whole group"""
    for r in range(len(seq.sizes) - 1):
        if seq.sizes[r] == seq.sizes[r + 1]:
            return r
    return None


def growth_degree_estimate(
    seq: GrowthSequence, r1: int, r2: int, delta: Optional[float] = None
) -> DegreeEstimate:
    if delta is None:
        delta = settings.EXPONENTIAL_DELTA
    if not 1 <= r1 < r2 <= seq.radius:
        raise PreconditionError(f"need 1 <= r1 < r2 <= {seq.radius}, got r1={r1}, r2={r2}")
    if seq.sizes[r1] < 2:
        raise PreconditionError(f"|B({r1})| = {seq.sizes[r1]} is too small for a slope")
    slope = math.log(seq.sizes[r2] / seq.sizes[r1]) / math.log(r2 / r1)
    exponential = all(seq.sizes[r + 1] >= (1 + delta) * seq.sizes[r] for r in range(r1, r2))
    return DegreeEstimate(r1=r1, r2=r2, slope=slope, exponential=exponential, delta=delta)


def base_case(seq: GrowthSequence, radius: int) -> Optional[int]:
    """Sublinear growth at one scale forces finiteness.

    If |B_S(R)| <= R then two consecutive balls below R have equal size by
    pigeonhole, so the group is the ball. Returns the stabilization radius
    in that case.
    """
    if radius < 1 or radius > seq.radius:
        raise PreconditionError(f"radius {radius} outside the measured range")
    if seq.sizes[radius] > radius:
        return None
    stable = detect_finite(seq)
    if stable is None or stable >= radius:
        raise PreconditionError("sublinear growth without stabilization: S does not generate")
    return stable


ball_service = BallService()
