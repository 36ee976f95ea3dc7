"""Slow conjugation growth, torsion-free reduction and virtually nilpotent assembly"""

import logging
import math
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from fgromov.config import settings
from fgromov.models.backends import Element
from fgromov.models.group import MarkedGroup
from fgromov.schemas.dichotomy import (
    NormComparabilityReport,
    SlowGrowthCert,
    SpotCheckRow,
    TorsionFreeCert,
    TorsionRelation,
    VirtuallyNilpotentCert,
)
from fgromov.services.ball_service import BallService, ball_service
from fgromov.services.subgroup_service import nilpotency_check, product_set
from fgromov.utils.errors import (
    BudgetExhaustedError,
    PreconditionError,
    SlowGrowthFailure,
)
from fgromov.utils.timer import timer

logger = logging.getLogger(__name__)

DEFAULT_NORM_CAP = 64


def _lattice_oracle(group: MarkedGroup) -> Callable[[Element], bool]:
    member = getattr(group.backend, "in_lattice", None)
    if member is None:
        raise PreconditionError(f"{group.name} has no normal-subgroup membership oracle")
    return member


def _sorted(group: MarkedGroup, elements) -> List[Element]:
    return sorted(elements, key=group.key)


def conjugate_power(group: MarkedGroup, e: Element, n: int, h: Element) -> Element:
    """T^n(h) = e^n h e^-n"""
    en = group.backend.power(e, n)
    return group.mul(group.mul(en, h), group.inv(en))


def _orbit(group: MarkedGroup, e: Element, base: Sequence[Element], N: int) -> set:
    return {conjugate_power(group, e, n, h) for n in range(-N, N + 1) for h in base}


def _lattice_counts(group: MarkedGroup, radius: int, service: BallService) -> List[int]:
    """|B_S(r) ∩ H| for r = 0..radius"""
    member = _lattice_oracle(group)
    ball = service.enumerate_ball(group, radius)
    counts = []
    for r in range(radius + 1):
        counts.append(sum(1 for g in ball.elements[: ball.size_at(r)] if member(g)))
    return counts


def _derived_range(R: int) -> int:
    return max(settings.SLOWG_MIN_RANGE, R // settings.SLOWG_RANGE_DIVISOR)


def _first_escape(
    group: MarkedGroup, e: Element, S_tilde: Sequence[Element], range_: int
) -> Optional[Tuple[int, Element]]:
    """First (n, h) in scan order with T^n h outside S~·S~·S~"""
    square = product_set(group, S_tilde, S_tilde, settings.PRODUCT_SET_CAP)
    cube = product_set(group, square, S_tilde, settings.PRODUCT_SET_CAP)
    for n in range(-range_, range_ + 1):
        for h in S_tilde:
            if conjugate_power(group, e, n, h) not in cube:
                return n, h
    return None


def verify_slow_growth(group: MarkedGroup, e: Element, S_tilde: Sequence[Element], range_: int) -> bool:
    """T^n S~ ⊆ B_S~(3) for all |n| <= range; S~ must contain the identity"""
    if group.identity not in S_tilde:
        S_tilde = [group.identity, *S_tilde]
    return _first_escape(group, e, S_tilde, range_) is None


@timer(logger=logger)
def slow_growth_generators(
    group: MarkedGroup,
    e: Element,
    R_candidates: Sequence[int] = (1, 2),
    spread: Optional[int] = None,
    range_: Optional[int] = None,
    service: BallService = ball_service,
) -> Tuple[List[Element], int, SlowGrowthCert]:
    """S~ = A_N = ∪_{|n| <= N} T^n(B_S(R) ∩ H) with T(h) = e h e^-1.

    R is the candidate with the smallest ratio |B(spread·R) ∩ H| / |B(R) ∩ H|,
    N the first minimizer of |A_(N+1)·B_H| - |A_N·B_H| over 0..R//2. The
    certificate checks T^n S~ ⊆ B_S~(3) for every |n| <= range.
    """
    member = _lattice_oracle(group)
    if member(e):
        raise PreconditionError("e must lie outside the normal subgroup")
    if not R_candidates or min(R_candidates) < 1:
        raise PreconditionError("radius candidates must be positive")
    spread = spread or settings.SLOWG_SPREAD
    if spread < 2:
        raise PreconditionError(f"spread must be at least 2, got {spread}")

    counts = _lattice_counts(group, spread * max(R_candidates), service)
    ratio_profile = [counts[spread * R] / counts[R] for R in R_candidates]
    R = R_candidates[min(range(len(R_candidates)), key=lambda i: ratio_profile[i])]
    logger.debug(f"slow growth radius R={R} from ratios {ratio_profile}")

    ball = service.enumerate_ball(group, R)
    B_H = _sorted(group, (g for g in ball.elements if member(g)))
    sizes = []
    for N in range(R // 2 + 2):
        A_N = _orbit(group, e, B_H, N)
        sizes.append(len(product_set(group, A_N, B_H, settings.PRODUCT_SET_CAP)))
    increments = [b - a for a, b in zip(sizes, sizes[1:])]
    N = min(range(len(increments)), key=lambda i: increments[i])
    strict = increments[N] < len(B_H)

    S_tilde = _sorted(group, _orbit(group, e, B_H, N))
    range_ = range_ or _derived_range(R)
    escape = _first_escape(group, e, S_tilde, range_)

    rows = [group.backend.to_row(s) for s in S_tilde]
    if escape is not None:
        n, h = escape
        logger.error(f"T^{n} maps {h} outside B_S~(3) at R={R}, N={N}")
        raise SlowGrowthFailure(
            f"conjugation escapes B_S~(3) at n={n}",
            details={
                "R": R,
                "N": N,
                "range": range_,
                "ratio_profile": ratio_profile,
                "increments": increments,
                "lattice_counts": counts,
                "escape": {"n": n, "h": group.backend.to_row(h)},
            },
        )
    cert = SlowGrowthCert(
        R=R,
        N=N,
        range=range_,
        spread=spread,
        ratio_profile=ratio_profile,
        increments=increments,
        strict_pigeonhole=strict,
        generators=rows,
        verified=True,
    )
    logger.info(f"slow growth: |S~|={len(S_tilde)}, R={R}, N={N}, range={range_}")
    return S_tilde, range_, cert


def _without_identity(group: MarkedGroup, elements: Sequence[Element]) -> List[Element]:
    return [g for g in elements if not group.backend.is_identity(g)]


def slow_growth_spot_check(
    group: MarkedGroup,
    e: Element,
    S_tilde: Sequence[Element],
    range_: int,
    h_samples: Sequence[Element],
    n_max: int,
    max_norm: int = 6,
    service: BallService = ball_service,
) -> List[SpotCheckRow]:
    """||T^n h||_S~ <= 3^ceil(|n|/range) ||h||_S~ by BFS over the S~ marking"""
    if range_ < 1:
        raise PreconditionError("range must be positive")
    tilde = group.remark(_without_identity(group, S_tilde), name=f"{group.name}~")
    rows = []
    for h in h_samples:
        norm_h = service.word_norm(tilde, h, max_norm)
        if norm_h is None:
            raise PreconditionError(f"sample {h} has S~-norm above {max_norm}")
        for n in range(-n_max, n_max + 1):
            bound = 3 ** math.ceil(abs(n) / range_) * norm_h
            image = conjugate_power(group, e, n, h)
            norm_image = service.word_norm(tilde, image, bound)
            rows.append(
                SpotCheckRow(
                    h=group.backend.to_row(h),
                    n=n,
                    norm_h=norm_h,
                    norm_image=norm_image,
                    bound=bound,
                    holds=norm_image is not None,
                )
            )
    failures = sum(1 for row in rows if not row.holds)
    if failures:
        logger.warning(f"slow growth spot check: {failures} of {len(rows)} rows exceed the bound")
    return rows


def default_torsion_growth(M: int) -> int:
    return settings.TORSION_F_SLOPE * M + settings.TORSION_F_OFFSET


def _l1_ball_size(dim: int, F: int) -> int:
    return sum(2 ** k * math.comb(dim, k) * math.comb(F, k) for k in range(min(dim, F) + 1))


def _l1_sphere(dim: int, size: int) -> Iterator[Tuple[int, ...]]:
    if dim == 0:
        if size == 0:
            yield ()
        return
    for first in range(-size, size + 1):
        for tail in _l1_sphere(dim - 1, size - abs(first)):
            yield (first,) + tail


def _l1_vectors(dim: int, F: int) -> Iterator[Tuple[int, ...]]:
    """Integer vectors with Σ|n_i| <= F, by l1 size then lexicographically"""
    for size in range(F + 1):
        yield from _l1_sphere(dim, size)


def _find_relation(group: MarkedGroup, gens: Sequence[Element], F: int) -> Optional[Tuple[int, ...]]:
    """First canonical-key collision among Σ n_i f_i with Σ|n_i| <= F, as n - n'"""
    if not gens:
        return None
    backend = group.backend
    seen: Dict[bytes, Tuple[int, ...]] = {}
    for vec in _l1_vectors(len(gens), F):
        value = group.identity
        for f, n in zip(gens, vec):
            if n:
                value = group.mul(value, backend.power(f, n))
        key = group.key(value)
        earlier = seen.get(key)
        if earlier is not None:
            relation = tuple(a - b for a, b in zip(vec, earlier))
            if next(a for a in relation if a) < 0:
                relation = tuple(-a for a in relation)
            return relation
        seen[key] = vec
    return None


def _pair_representatives(group: MarkedGroup) -> List[Element]:
    backend = group.backend
    reps: List[Element] = []
    keys = set()
    for s in group.base_generators:
        if backend.is_identity(s) or group.key(s) in keys:
            continue
        reps.append(s)
        keys.add(group.key(s))
        keys.add(group.key(group.inv(s)))
    return reps


@timer(logger=logger)
def torsion_free_reduce(
    group: MarkedGroup,
    F: Optional[Callable[[int], int]] = None,
) -> TorsionFreeCert:
    """Drop generators along relations until the remaining f_i are F(M)-torsion-free.

    A relation Σ n_i f_i = 0 drops the generator with the largest |n_i|
    (lowest index on ties) and replaces M by D'·M·F(M).
    """
    F = F or default_torsion_growth
    gens = _pair_representatives(group)
    backend = group.backend
    for a in gens:
        for b in gens:
            if not backend.is_identity(backend.commutator(a, b)):
                raise PreconditionError(f"{group.name} is not abelian on its generators")

    M = 1
    lineage: List[TorsionRelation] = []
    iterations = 0
    while True:
        iterations += 1
        bound = F(M)
        searched = _l1_ball_size(len(gens), bound)
        if searched > settings.TORSION_SEARCH_CAP:
            logger.error(f"torsion search at F(M)={bound} needs {searched} combinations")
            raise BudgetExhaustedError(
                f"torsion search over {searched} combinations exceeds the cap",
                details={"M": M, "F_of_M": bound, "generators": len(gens)},
            )
        relation = _find_relation(group, gens, bound)
        if relation is None:
            break
        magnitudes = [abs(a) for a in relation]
        drop = magnitudes.index(max(magnitudes))
        M_after = len(gens) * M * bound
        lineage.append(
            TorsionRelation(
                coefficients=list(relation),
                dropped_index=drop,
                dropped_generator=backend.to_row(gens[drop]),
                M_after=M_after,
            )
        )
        logger.debug(f"relation {relation}: dropping generator {drop}, M -> {M_after}")
        gens = gens[:drop] + gens[drop + 1:]
        M = M_after

    logger.info(f"torsion-free reduction: {len(gens)} generators, M={M}, {iterations} iterations")
    return TorsionFreeCert(
        generators=[backend.to_row(f) for f in gens],
        M=M,
        F_of_M=F(M),
        lineage=lineage,
        iterations=iterations,
        verified=True,
    )


def norm_comparability_estimate(
    group: MarkedGroup,
    S_tilde: Sequence[Element],
    S_sub: Sequence[Element],
    radius: int,
    norm_cap: int = DEFAULT_NORM_CAP,
    service: BallService = ball_service,
) -> NormComparabilityReport:
    """Both ratios ||h||_S~ / ||h||_S''' and back over the S'''-ball of the given radius"""
    if radius < 1:
        raise PreconditionError("radius must be positive")
    tilde = group.remark(_without_identity(group, S_tilde), name=f"{group.name}~")
    sub = group.remark(_without_identity(group, S_sub), name=f"{group.name}'''")
    sub_ball = service.enumerate_ball(sub, radius)

    L = 0
    for s in sub.generators:
        norm = service.word_norm(tilde, s, norm_cap)
        if norm is None:
            raise PreconditionError(f"generator {s} has S~-norm above {norm_cap}")
        L = max(L, norm)
    tilde_ball = service.enumerate_ball(tilde, L * radius)

    upper = lower = 0.0
    for g in sub_ball.elements[1:]:
        outer = tilde_ball.norm_of(g)
        inner = sub_ball.norm_of(g)
        upper = max(upper, outer / inner)
        lower = max(lower, inner / outer)
    logger.info(f"norm comparability at radius {radius}: upper {upper:.3f}, lower {lower:.3f}")
    return NormComparabilityReport(radius=radius, upper=upper, lower=lower, M_est=max(upper, lower))


def assemble_virtually_nilpotent(
    group: MarkedGroup,
    e: Element,
    P: int,
    H_part: Sequence[Element],
    r: int,
) -> Tuple[MarkedGroup, VirtuallyNilpotentCert]:
    """<e^P, H'''> marked by {e^±P} ∪ H_part, checked nilpotent of step at most r+1"""
    if P < 1 or r < 0:
        raise PreconditionError(f"need P >= 1 and r >= 0, got P={P}, r={r}")
    eP = group.backend.power(e, P)
    S_new = [eP, group.inv(eP), *_without_identity(group, H_part)]
    sub = group.remark(S_new, name=f"{group.name}[P={P}]")
    result = None
    for s in range(1, r + 2):
        result = nilpotency_check(sub, s)
        if result.nilpotent:
            break
    cert = VirtuallyNilpotentCert(
        P=P,
        generators=[group.backend.to_row(g) for g in sub.generators],
        step=result.step,
        nilpotent=result.nilpotent,
        witness=result.witness,
    )
    if cert.nilpotent:
        logger.info(f"{sub.name}: nilpotent of step {cert.step}")
    else:
        logger.warning(f"{sub.name}: not nilpotent of step {r + 1}, witness {cert.witness}")
    return sub, cert
