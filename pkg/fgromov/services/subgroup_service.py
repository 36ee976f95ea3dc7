"""Constructive subgroup passages and the quantitative-index calculus"""

import logging
import math
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

from fgromov.config import settings
from fgromov.models.backends import Element
from fgromov.models.ball import Ball
from fgromov.models.group import MarkedGroup
from fgromov.schemas.subgroup import (
    CommutatorGeneratorsResult,
    CommutatorWitness,
    FiniteIndexResult,
    GeneratorReductionResult,
    KRSubgroupCert,
    NilpotencyResult,
)
from fgromov.services.ball_service import BallService, ball_service
from fgromov.utils.errors import (
    BudgetExhaustedError,
    InternalError,
    PigeonholeFailure,
    PreconditionError,
    ResourceLimitError,
)
from fgromov.utils.timer import timer

logger = logging.getLogger(__name__)

Member = Callable[[Element], bool]


def _ball_at_least(group: MarkedGroup, radius: int, ball: Optional[Ball], service: BallService) -> Ball:
    if ball is not None and ball.group is group and ball.radius >= radius:
        return ball
    return service.enumerate_ball(group, radius)


def product_set(group: MarkedGroup, left: Iterable[Element], right: Sequence[Element], cap: int) -> Set[Element]:
    mul = group.mul
    out: Set[Element] = set()
    for a in left:
        for b in right:
            out.add(mul(a, b))
        if len(out) > cap:
            raise ResourceLimitError("product set", cap)
    return out


def verify_kr_inclusion(
    group: MarkedGroup,
    generators: Sequence[Element],
    K: int,
    ball: Optional[Ball] = None,
    service: BallService = ball_service,
) -> bool:
    """Exhaustive check of B_S(K+1) ⊆ B_S(K)·B_S'(K).

    Elements of norm <= K are covered by the identity of B_S'(K). The sphere
    of radius K+1 is checked against S'-words one length at a time, stopping
    as soon as every sphere element is covered. Prefixes are not confined to
    any S-ball: a prefix of a word of length <= K has S-norm at most
    K·max|s'|_S, and only the word count is capped.
    """
    ball = _ball_at_least(group, K + 1, ball, service)
    inner = set(ball.sub_ball(K).elements)
    mul, inv = group.mul, group.inv
    pending = ball.elements[ball.size_at(K):ball.size_at(K + 1)]
    if not pending:
        return True

    words = {group.identity}
    frontier = [group.identity]
    for length in range(1, K + 1):
        fresh = []
        for w in frontier:
            for s in generators:
                v = mul(w, s)
                if v not in words:
                    words.add(v)
                    fresh.append(v)
        if len(words) > settings.PRODUCT_SET_CAP:
            raise ResourceLimitError("S'-words in the (K, R)-check", settings.PRODUCT_SET_CAP)
        fresh_inverses = [inv(v) for v in fresh]
        pending = [y for y in pending if not any(mul(y, v_inv) in inner for v_inv in fresh_inverses)]
        if not pending:
            return True
        logger.debug(f"{len(pending)} sphere elements uncovered by S'-words of length {length}")
        frontier = fresh
    return False


def _generator_radius(group: MarkedGroup, generators: Sequence[Element], ball: Ball) -> int:
    radius = 0
    for s in generators:
        norm = ball.norm_of(s)
        if norm is None:
            return ball.radius + 1
        radius = max(radius, norm)
    return radius


def build_certificate(
    group: MarkedGroup,
    generators: Sequence[Element],
    K: int,
    R: int,
    ball: Optional[Ball] = None,
    index: Optional[int] = None,
    service: BallService = ball_service,
) -> KRSubgroupCert:
    ball = _ball_at_least(group, max(K + 1, R), ball, service)
    generator_radius = _generator_radius(group, generators, ball)
    checked = generator_radius <= R and verify_kr_inclusion(group, generators, K, ball, service)
    return KRSubgroupCert(
        K=K,
        R=R,
        generators=[group.backend.to_row(s) for s in generators],
        checked_inclusion=checked,
        generator_radius=generator_radius,
        index=index,
    )


def maximal_separated_net(ball: Ball, center_set: Sequence[Element], r: int) -> List[Element]:
    """Greedy maximal X ⊆ center_set with the translates x·B_S(r) pairwise disjoint"""
    if r < 1:
        raise PreconditionError(f"separation must be at least 1, got {r}")
    group = ball.group
    mul = group.mul
    inner = ball.sub_ball(r).elements
    order = sorted(center_set, key=lambda g: (ball.index[g] if g in ball.index else len(ball), group.key(g)))
    occupied: Set[Element] = set()
    net: List[Element] = []
    for x in order:
        translate = [mul(x, b) for b in inner]
        if any(t in occupied for t in translate):
            continue
        occupied.update(translate)
        net.append(x)
    return net


@timer(logger=logger)
def generator_reduction(
    group: MarkedGroup,
    R_0: int,
    kappa: Union[float, Fraction],
    d: Optional[float] = None,
    service: BallService = ball_service,
) -> Tuple[List[Element], int, GeneratorReductionResult]:
    """Replace S by a net of a ball so that S' is a (R_0^kappa, R_0^kappa)-subgroup marking"""
    if R_0 < 10:
        raise PreconditionError(f"R_0 must be at least 10, got {R_0}")
    if not 0 < kappa < 1:
        raise PreconditionError(f"kappa must lie in (0, 1), got {kappa}")
    kappa_f = float(kappa)
    hypothesis = R_0 >= 100 ** (1 / kappa_f)
    if not hypothesis:
        logger.warning(f"R_0={R_0} is below 100^(1/kappa); running at desk scale anyway")

    scale = R_0 ** kappa_f
    r_max = max(1, math.floor(scale / 10))
    K = math.ceil(scale)
    ball = service.enumerate_ball(group, max(10 * r_max, K + 1))

    ratios = [ball.size_at(10 * r) / ball.size_at(r) for r in range(1, r_max + 1)]
    best = min(ratios)
    r = ratios.index(best) + 1
    logger.info(f"{group.name}: pigeonhole radius r={r} with |B(10r)|/|B(r)| = {best:.3f}")

    net = maximal_separated_net(ball, ball.sub_ball(4 * r).elements, r)
    chosen: Dict[Element, None] = {}
    for x in net:
        chosen.setdefault(x, None)
        chosen.setdefault(group.inv(x), None)
    S_prime = sorted(chosen, key=lambda g: ball.index[g])

    covered = product_set(group, S_prime, ball.sub_ball(2 * r).elements, settings.PRODUCT_SET_CAP)
    covering = all(g in covered for g in ball.sub_ball(4 * r).elements)
    if not covering:
        raise InternalError("net translates fail to cover B(4r); maximality is broken")

    cert = build_certificate(group, S_prime, K, K, ball, service=service)
    transferred_R = R_0 ** (1 - kappa_f)
    result = GeneratorReductionResult(
        radius=r,
        ratio_profile=ratios,
        net_size=len(net),
        covering_verified=covering,
        scale_hypothesis_holds=hypothesis,
        transferred_R=transferred_R,
        transferred_d=None if d is None else d / (1 - kappa_f),
        certificate=cert,
    )
    return S_prime, r, result


@timer(logger=logger)
def commutator_generators(
    group: MarkedGroup,
    radius_budget: int,
    service: BallService = ball_service,
) -> Tuple[List[Element], CommutatorGeneratorsResult]:
    """Conjugates of generator commutators, cut at the first doubling pigeonhole"""
    if radius_budget < 2:
        raise PreconditionError(f"radius budget must be at least 2, got {radius_budget}")
    cap = settings.PRODUCT_SET_CAP
    backend = group.backend
    mul, inv = group.mul, group.inv
    ball = service.enumerate_ball(group, radius_budget + 1)

    base: Dict[Element, Tuple[int, int]] = {}
    for i, e in enumerate(group.generators):
        for j, e_prime in enumerate(group.generators):
            base.setdefault(backend.commutator(e, e_prime), (i, j))

    witnesses: Dict[Element, Tuple[Element, int, int]] = {}
    A_levels: List[List[Element]] = []
    cumulative: List[Set[Element]] = []
    start = 0
    for r in range(radius_budget + 2):
        for g in ball.elements[start:ball.size_at(r)]:
            g_inv = inv(g)
            for c, (i, j) in base.items():
                witnesses.setdefault(mul(mul(g, c), g_inv), (g, i, j))
        start = ball.size_at(r)
        A_r = sorted(witnesses, key=group.key)
        A_levels.append(A_r)
        try:
            cumulative.append(set(A_r) if r == 0 else product_set(group, A_r, list(cumulative[-1]), cap))
        except ResourceLimitError:
            logger.error(f"{group.name}: product sets exceed {cap} at r={r}")
            raise BudgetExhaustedError(
                f"commutator product sets exceed {cap} elements at r={r}",
                details={"product_set_sizes": [len(a) for a in cumulative]},
            )
        logger.debug(f"r={r}: |A_r|={len(A_r)}, |A_<=r|={len(cumulative[-1])}")

        rr = r - 1
        if rr >= 2 and len(cumulative[rr + 1]) < 2 * len(cumulative[rr]):
            lower = list(cumulative[rr])
            quotient = product_set(group, lower, [inv(a) for a in lower], cap)
            verified = cumulative[rr + 1] <= quotient
            if not verified:
                raise InternalError("A_<=r+1 is not inside A_<=r A_<=r^-1")
            S_prime = A_levels[rr]
            result = CommutatorGeneratorsResult(
                radius=rr,
                product_set_sizes=[len(a) for a in cumulative],
                inclusion_verified=verified,
                witnesses=[
                    CommutatorWitness(
                        element=backend.to_row(a),
                        conjugator=backend.to_row(witnesses[a][0]),
                        e=witnesses[a][1],
                        e_prime=witnesses[a][2],
                    )
                    for a in S_prime
                ],
            )
            logger.info(f"{group.name}: commutator pigeonhole at r={rr}, |S'|={len(S_prime)}")
            return S_prime, result

    raise BudgetExhaustedError(
        f"no doubling pigeonhole within radius budget {radius_budget}",
        details={"product_set_sizes": [len(a) for a in cumulative]},
    )


@timer(logger=logger)
def finite_index_generators(
    group: MarkedGroup,
    member: Member,
    index_bound: int,
    service: BallService = ball_service,
) -> Tuple[List[Element], FiniteIndexResult]:
    """Generators of a subgroup G' of index at most I, given a membership oracle"""
    if index_bound < 1:
        raise PreconditionError(f"index bound must be positive, got {index_bound}")
    mul, inv = group.mul, group.inv
    K = 2 * index_bound + 1
    ball = service.enumerate_ball(group, K + 1)

    representatives: List[Element] = []
    counts: List[int] = []
    for r in range(index_bound + 2):
        for g in ball.elements[ball.size_at(r - 1) if r else 0:ball.size_at(r)]:
            if not any(member(mul(inv(x), g)) for x in representatives):
                representatives.append(g)
        counts.append(len(representatives))

    r_0 = next((r for r in range(index_bound + 1) if counts[r + 1] == counts[r]), None)
    if r_0 is None:
        raise PigeonholeFailure(
            f"coset count did not saturate by radius {index_bound}",
            details={"coset_counts": counts},
        )

    S_prime = [g for g in ball.sub_ball(2 * r_0 + 1).elements if member(g)]
    cert = build_certificate(group, S_prime, K, K, ball, index=counts[r_0], service=service)
    logger.info(f"{group.name}: {counts[r_0]} cosets saturate at r_0={r_0}, |S'|={len(S_prime)}")
    return S_prime, FiniteIndexResult(saturation_radius=r_0, coset_counts=counts, certificate=cert)


def trans_params(K: int, R: int, K_prime: int, R_prime: int) -> Tuple[int, int]:
    """Parameters of a (K', R')-subgroup of a (K, R)-subgroup"""
    return K * K_prime * (K + R * K_prime + 1), R * R_prime


def growth_transfer_params(R_0: float, d: float, kappa: Union[float, Fraction]) -> Tuple[float, float]:
    """(R_0^(1-kappa), d/(1-kappa))"""
    if not 0 <= kappa < 1:
        raise PreconditionError(f"kappa must lie in [0, 1), got {kappa}")
    k = float(kappa)
    return R_0 ** (1 - k), d / (1 - k)


def index_factorial_bound(I: int, J: int) -> int:
    return math.factorial(I * J)


def nilpotency_check(group: MarkedGroup, s: int) -> NilpotencyResult:
    """All (s+1)-fold left-nested commutators of generators vanish.

    Commutators are deduplicated by value at each depth, each value keeping
    the first generator tuple that produced it.
    """
    if s < 1:
        raise PreconditionError(f"step must be at least 1, got {s}")
    if group.size ** (s + 1) > settings.NILPOTENCY_TUPLE_CAP:
        raise ResourceLimitError(f"|S|^{s + 1} commutator tuples", settings.NILPOTENCY_TUPLE_CAP)
    backend = group.backend
    level: Dict[Element, Tuple[int, ...]] = {}
    for i, a in enumerate(group.generators):
        level.setdefault(a, (i,))
    for _ in range(s):
        nxt: Dict[Element, Tuple[int, ...]] = {}
        for c, tup in level.items():
            for j, a in enumerate(group.generators):
                nxt.setdefault(backend.commutator(c, a), tup + (j,))
        level = nxt
    for value, tup in level.items():
        if not backend.is_identity(value):
            return NilpotencyResult(step=s, nilpotent=False, witness=list(tup), distinct_commutators=len(level))
    return NilpotencyResult(step=s, nilpotent=True, distinct_commutators=len(level))
