"""Command orchestration: growth tables, the reduction loop, certificates and checks"""

import logging
import math
import time
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

from fgromov.config import settings
from fgromov.models import intmatrix
from fgromov.models.backends import Element
from fgromov.models.ball import Ball
from fgromov.models.enums import StepKind, TerminalState
from fgromov.models.functions import BallFunction, GramSubspace
from fgromov.models.group import MarkedGroup
from fgromov.schemas.growth import GrowthReport, GrowthRow, GrowthSequence
from fgromov.schemas.harmonic import AlmostHarmonicResult
from fgromov.schemas.kleiner import GreedyDimensionResult
from fgromov.schemas.pipeline import (
    DichotomyReport,
    HarmonicReport,
    MilnorCheck,
    NilpotentCertificate,
    ReductionStep,
    ReductionTrace,
    SlowGrowthReport,
)
from fgromov.schemas.subgroup import KRSubgroupCert
from fgromov.services import (
    approx_rep_service,
    harmonic_service,
    kleiner_service,
    lattice_service,
    milnor_wolf_service,
)
from fgromov.services.ball_cache import BallCache
from fgromov.services.ball_service import (
    BallService,
    ball_service,
    detect_finite,
    growth_degree_estimate,
    sequence_from_ball,
)
from fgromov.services.subgroup_service import (
    build_certificate,
    commutator_generators,
    finite_index_generators,
    generator_reduction,
    index_factorial_bound,
    nilpotency_check,
)
from fgromov.utils.errors import (
    BudgetExhaustedError,
    NumericalFailureError,
    PreconditionError,
    ResourceLimitError,
    SupportEscapeError,
    ValidationError,
)
from fgromov.utils.timer import timer
from fgromov.utils.validators import validate_radius

logger = logging.getLogger(__name__)

DEFAULT_REDUCE_RADIUS = 8
DEFAULT_COMMUTATOR_BUDGET = 4
DEFAULT_HARMONIC_RADIUS = 2
DEFAULT_R_0 = 16
DEFAULT_KAPPA = 0.5


def open_cache(cache_dir: Optional[Path] = None, use_cache: bool = True) -> Optional[BallCache]:
    """--cache-dir beats FGROMOV_CACHE, which beats ~/.cache/fgromov"""
    if not use_cache:
        return None
    return BallCache(cache_dir)


def get_ball(
    group: MarkedGroup,
    radius: int,
    cache: Optional[BallCache] = None,
    service: BallService = ball_service,
) -> Tuple[Ball, bool]:
    """The ball and whether it came from the cache"""
    if cache is None:
        return service.enumerate_ball(group, radius), False
    ball = cache.load(group, radius)
    if ball is not None:
        return ball, True
    ball = service.enumerate_ball(group, radius)
    cache.store(ball)
    return ball, False


def _degree(seq: GrowthSequence) -> Optional[float]:
    r2 = seq.radius
    r1 = r2 // 2
    if r1 < 1 or seq.sizes[r1] < 2:
        return None
    return growth_degree_estimate(seq, r1, r2).slope


def growth_report(group: MarkedGroup, R_max: int, cache: Optional[BallCache] = None) -> GrowthReport:
    valid, message = validate_radius(R_max, minimum=1)
    if not valid:
        raise ValidationError(message)
    ball, cached = get_ball(group, R_max, cache)
    seq = sequence_from_ball(ball)
    stable = detect_finite(seq)
    rows = [
        GrowthRow(r=r, size=size, sphere=ball.sphere_sizes[r], stabilized=stable is not None and r >= stable)
        for r, size in enumerate(seq.sizes)
    ]
    estimates = []
    for r1, r2 in ((R_max // 4, R_max // 2), (R_max // 2, R_max)):
        if 1 <= r1 < r2 and seq.sizes[r1] >= 2:
            estimates.append(growth_degree_estimate(seq, r1, r2))
    exponential = stable is None and bool(estimates) and estimates[-1].exponential
    if stable is not None:
        logger.info(f"{group.name}: ball stabilizes at r={stable}, |G| = {seq.sizes[stable]}")
    return GrowthReport(
        group=group.name,
        fingerprint=seq.fingerprint,
        rows=rows,
        stabilization_radius=stable,
        estimates=estimates,
        exponential=exponential,
        cached=cached,
    )


def _harmonic_probe(
    group: MarkedGroup, radius: int, derived: Sequence[Element]
) -> Tuple[Optional[AlmostHarmonicResult], Optional[float]]:
    """Almost-harmonic u on the current group and its variation along derived generators"""
    if radius < 1:
        return None, None
    try:
        u, result = harmonic_service.build_almost_harmonic(group, radius)
    except (ResourceLimitError, NumericalFailureError, SupportEscapeError) as e:
        logger.warning(f"{group.name}: no almost-harmonic function at R={radius}: {e.message}")
        return None, None
    try:
        deviation = approx_rep_service.trivial_directions_check(u, derived, 1)
    except SupportEscapeError as e:
        logger.warning(f"{group.name}: derived generators leave the harmonic window: {e.message}")
        deviation = None
    return result, deviation


def _is_trivial(group: MarkedGroup) -> bool:
    return all(group.backend.is_identity(s) for s in group.generators)


@timer(logger=logger)
def reduce_group(
    group: MarkedGroup,
    budget: Optional[int] = None,
    radius: int = DEFAULT_REDUCE_RADIUS,
    commutator_budget: int = DEFAULT_COMMUTATOR_BUDGET,
    harmonic_radius: int = DEFAULT_HARMONIC_RADIUS,
    R_0: int = DEFAULT_R_0,
    kappa: float = DEFAULT_KAPPA,
    cache: Optional[BallCache] = None,
    clock: Callable[[], float] = time.monotonic,
) -> ReductionTrace:
    """Descend the derived series until the group is finite or trivial.

    Each round records a Step1 passage (the generator-reduction marking with
    its verified (K, R)-certificate) and a Step2 passage to the commutator
    subgroup, with growth measured on both sides. A round whose degree
    estimate drops by less than DESCENT_THRESHOLD on an infinite subgroup ends
    the trace as stalled; a certificate that fails its inclusion check ends it
    as uncertified.

    Step1 re-marks the same group, so its index is 1 and the factorial chain
    behind `total_index_bound` stays at 1 for these traces. The S' marking is
    certified and recorded only: Step2 and the growth measurements keep the
    original generators, since balls in the S' marking reach far larger
    S-radii.
    """
    budget = settings.REDUCE_MAX_STEPS if budget is None else budget
    if budget < 0:
        raise ValidationError(f"budget must be non-negative, got {budget}")
    start = clock()
    current = group
    steps: List[ReductionStep] = []
    step1_indices: List[int] = []
    terminal: Optional[TerminalState] = None
    terminal_size: Optional[int] = None
    rejected: Optional[KRSubgroupCert] = None

    for round_ in range(budget + 1):
        if clock() - start > settings.WALL_CLOCK_SECONDS:
            logger.warning(f"reduce: wall clock of {settings.WALL_CLOCK_SECONDS}s exceeded")
            terminal = TerminalState.BUDGET
            break
        ball, _ = get_ball(current, radius, cache)
        seq = sequence_from_ball(ball)
        stable = detect_finite(seq)
        if stable is not None or _is_trivial(current):
            terminal_size = seq.sizes[stable] if stable is not None else 1
            terminal = TerminalState.TRIVIAL if terminal_size == 1 else TerminalState.FINITE
            break
        if round_ == budget:
            terminal = TerminalState.BUDGET
            break

        d_before = _degree(seq)
        description = current.describe()
        _, _, reduction = generator_reduction(current, R_0, kappa, d_before)
        if not reduction.certificate.checked_inclusion:
            logger.error(f"{current.name}: generator-reduction certificate failed its inclusion check")
            rejected = reduction.certificate
            terminal = TerminalState.UNCERTIFIED
            break
        steps.append(
            ReductionStep(
                index=len(steps),
                kind=StepKind.FINITE_INDEX,
                group=description,
                sizes_before=seq.sizes,
                d_before=d_before,
                index_bound=1,
                certificate=reduction.certificate,
                generator_reduction=reduction,
            )
        )
        step1_indices.append(1)

        try:
            derived, commutators = commutator_generators(current, commutator_budget)
        except BudgetExhaustedError as e:
            logger.warning(f"{current.name}: {e.message}")
            terminal = TerminalState.BUDGET
            break
        harmonic, deviation = _harmonic_probe(current, harmonic_radius, derived)
        sub = current.remark(derived, name=f"[{current.name}, {current.name}]")
        sub_ball, _ = get_ball(sub, radius, cache)
        sub_seq = sequence_from_ball(sub_ball)
        sub_finite = detect_finite(sub_seq) is not None
        d_after = 0.0 if sub_finite else _degree(sub_seq)
        steps.append(
            ReductionStep(
                index=len(steps),
                kind=StepKind.CYCLIC_KERNEL,
                group=description,
                sizes_before=seq.sizes,
                sizes_after=sub_seq.sizes,
                d_before=d_before,
                d_after=d_after,
                cyclic_target="abelianization, one cyclic factor at a time",
                kernel_oracle="commutator subgroup [G, G]",
                commutators=commutators,
                harmonic=harmonic,
                trivial_direction_deviation=deviation,
                subgroup_generators=[current.backend.to_row(g) for g in derived],
            )
        )
        logger.info(f"reduce round {round_}: degree {d_before} -> {d_after}")
        if not sub_finite and (d_before is None or d_after is None or d_before - d_after < settings.DESCENT_THRESHOLD):
            logger.warning(f"{current.name}: degree drop below {settings.DESCENT_THRESHOLD}, stopping")
            terminal = TerminalState.STALLED
            break
        current = sub

    total = 1
    for index in step1_indices:
        total = index_factorial_bound(total, index)
    return ReductionTrace(
        group=group.name,
        fingerprint=group.fingerprint(),
        radius=radius,
        steps=steps,
        step_count=len(steps),
        terminal=terminal,
        terminal_size=terminal_size,
        total_index_bound=total,
        rejected_certificate=rejected,
    )


def coordinate_kernel(group: MarkedGroup, coordinate: int, modulus: int) -> Callable[[Element], bool]:
    """Membership in {g : coordinate_j(g) ≡ 0 mod m}"""
    if modulus < 1:
        raise ValidationError(f"modulus must be positive, got {modulus}")
    width = len(group.backend.coordinates(group.identity))
    if not 0 <= coordinate < width:
        raise ValidationError(f"coordinate must lie in 0..{width - 1}, got {coordinate}")
    coordinates = group.backend.coordinates

    def member(g: Element) -> bool:
        return round(coordinates(g)[coordinate]) % modulus == 0

    return member


def certify_nilpotent(
    group: MarkedGroup,
    s: int,
    K: int,
    R: int,
    subgroup: Optional[Sequence[Element]] = None,
    kernel: Optional[Tuple[int, int]] = None,
    index_bound: Optional[int] = None,
) -> NilpotentCertificate:
    """A verified (K, R)-subgroup that is nilpotent of step s.

    The subgroup is the user's, the finite-index subgroup found from a
    coordinate-kernel oracle, or G itself.
    """
    if K < 1 or R < 1:
        raise ValidationError("K and R must be positive")
    finite_index = None
    kernel_oracle = None
    if kernel is not None:
        coordinate, modulus = kernel
        member = coordinate_kernel(group, coordinate, modulus)
        subgroup, finite_index = finite_index_generators(group, member, index_bound or modulus)
        kernel_oracle = f"coordinate {coordinate} = 0 mod {modulus}"
    generators = list(subgroup) if subgroup else list(group.generators)
    index = finite_index.certificate.index if finite_index is not None else None
    cert = build_certificate(group, generators, K, R, index=index)
    nilpotency = nilpotency_check(group.remark(generators), s)
    certified = cert.checked_inclusion and nilpotency.nilpotent
    if certified:
        logger.info(f"{group.name}: ({K}, {R}, {s})-virtually nilpotent")
    else:
        logger.warning(
            f"{group.name}: not certified (inclusion {cert.checked_inclusion}, nilpotent {nilpotency.nilpotent})"
        )
    return NilpotentCertificate(
        group=group.name,
        s=s,
        K=K,
        R=R,
        subgroup=cert,
        nilpotency=nilpotency,
        finite_index=finite_index,
        kernel_oracle=kernel_oracle,
        certified=certified,
    )


def dichotomy_report(T: Sequence[Sequence[int]], N: int = lattice_service.DEFAULT_GROWTH_STEPS, tower: bool = True) -> DichotomyReport:
    T = intmatrix.as_int_matrix(T)
    result = lattice_service.dichotomy(T, N)
    return DichotomyReport(
        matrix=[list(row) for row in T],
        result=result,
        tower=lattice_service.unipotent_tower(T) if tower else None,
    )


def slow_growth_report(
    group: MarkedGroup,
    R_candidates: Sequence[int] = (1, 2),
    spread: Optional[int] = None,
    range_: Optional[int] = None,
) -> SlowGrowthReport:
    """Slow-growth certificate for Z ⋉_T Z^D, then the unipotent tower and the nilpotent assembly"""
    backend = group.backend
    matrix = getattr(backend, "matrix", None)
    if matrix is None:
        raise PreconditionError(f"{group.name} is not a semidirect product with Z")
    D = len(matrix)
    e = backend.from_row([1] + [0] * D)
    _, _, cert = milnor_wolf_service.slow_growth_generators(group, e, R_candidates, spread, range_)
    tower = lattice_service.unipotent_tower(matrix)
    assembly = None
    if tower.polynomial:
        basis = [backend.from_row([0] + list(row)) for row in intmatrix.identity(D)]
        _, assembly = milnor_wolf_service.assemble_virtually_nilpotent(group, e, tower.P, basis, D)
    return SlowGrowthReport(group=group.name, certificate=cert, tower=tower, assembly=assembly)


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def milnor_bound_check(
    n: int, K: float, Delta: float, delta: float, R: float, C: Optional[float] = None
) -> MilnorCheck:
    """4(Δ/δ) exp(2πΔ√K R) < R, evaluated in logarithms"""
    if n < 1:
        raise ValidationError(f"dimension must be positive, got {n}")
    if K < 0 or Delta <= 0 or delta <= 0 or R <= 0:
        raise ValidationError("need K >= 0 and positive Delta, delta, R")
    exponent = 2 * math.pi * Delta * math.sqrt(K) * R
    log_ratio = math.log(Delta / delta)
    log_lhs = math.log(4) + log_ratio + exponent
    log_ball = n * (math.log(4) + log_ratio + math.log(R)) + exponent
    hypothesis = None
    if C is not None:
        threshold = C * (2 * n) ** C
        hypothesis = R > math.e and math.log(math.log(R)) >= threshold
        if not hypothesis:
            logger.warning(f"R={R} is below exp(exp(C(2n)^C)) with C={C}; the conclusion is unconditional only above it")
    return MilnorCheck(
        n=n,
        K=K,
        Delta=Delta,
        delta=delta,
        R=R,
        log_lhs=log_lhs,
        lhs=_safe_exp(log_lhs),
        rhs=R,
        holds=log_lhs < math.log(R),
        log_ball_bound=log_ball,
        ball_bound=_safe_exp(log_ball),
        C=C,
        hypothesis_holds=hypothesis,
    )


def harmonic_report(
    group: MarkedGroup, radius: int, force_case: Optional[int] = None
) -> Tuple[BallFunction, HarmonicReport]:
    u, result = harmonic_service.build_almost_harmonic(group, radius, force_case=force_case)
    return u, HarmonicReport(group=group.name, result=result, sup_norm=u.sup_norm())


def kleiner_dimension(
    group: MarkedGroup,
    radius: int,
    count: int,
    seed: Optional[int] = None,
    drop_factor: Optional[float] = None,
    cache: Optional[BallCache] = None,
) -> Tuple[GramSubspace, GreedyDimensionResult]:
    """Greedy harmonic dimension over Dirichlet-harmonic candidates on B(radius)"""
    if count < 1:
        raise ValidationError(f"need at least one candidate, got {count}")
    ball, _ = get_ball(group, radius, cache)
    candidates = kleiner_service.harmonic_candidates(ball, count, seed=seed)
    basis, _, result = kleiner_service.greedy_dimension(candidates, radius, drop_factor)
    return basis, result
