"""Q_R Gram calculus, volume measurements and greedy harmonic dimension"""

import csv
import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

from fgromov.config import settings
from fgromov.models.ball import Ball
from fgromov.models.functions import BallFunction, GramSubspace
from fgromov.schemas.kleiner import (
    GoodScaleResult,
    GreedyDimensionResult,
    GreedyStep,
    ScaleProfileEntry,
    VolumeDecreaseReport,
)
from fgromov.services import harmonic_service
from fgromov.utils.errors import (
    GoodScaleFailure,
    NumericalFailureError,
    PreconditionError,
    SupportEscapeError,
    ValidationError,
)
from fgromov.utils.timer import timer

logger = logging.getLogger(__name__)


def _centered(u: BallFunction, R: int) -> np.ndarray:
    ball = u.ball
    if ball.radius < R and not ball.is_whole_group:
        raise SupportEscapeError(f"function lives on B({ball.radius}), scale is {R}")
    return u.values[: ball.size_at(R)] - u.values[0]


def gram_form(u: BallFunction, v: BallFunction, R: int) -> float:
    """Q_R(u, v) = Σ_{x in B(R)} (u(x) - u(id))(v(x) - v(id))"""
    return float(_centered(u, R) @ _centered(v, R))


def gram_matrix(us: Sequence[BallFunction], R: int) -> np.ndarray:
    if not us:
        return np.zeros((0, 0))
    X = np.vstack([_centered(u, R) for u in us])
    return X @ X.T


def gram_determinant(gram: np.ndarray) -> float:
    """Product of eigenvalues, clamped to 0 inside the tolerance band"""
    if gram.size == 0:
        return 1.0
    det = float(np.prod(np.linalg.eigvalsh(gram)))
    if det < 0:
        if det < -settings.VOLUME_CLAMP_TOL:
            logger.error(f"Gram determinant {det:.3g} is negative beyond tolerance")
            raise NumericalFailureError(f"Gram determinant {det:.3g} is negative", details={"det": det})
        det = 0.0
    return det


def volume(us: Sequence[BallFunction], R: int) -> float:
    """Vol_R(u_1..u_k) = det(Q_R(u_i, u_j))^(1/2)"""
    return math.sqrt(gram_determinant(gram_matrix(us, R)))


def volume_monotonicity_check(us: Sequence[BallFunction], R: int) -> bool:
    inner, outer = volume(us, R), volume(us, 4 * R)
    holds = inner <= outer * (1 + 1e-9) + 1e-9
    if not holds:
        logger.error(f"volume monotonicity fails: Vol_{R} = {inner} > Vol_{4 * R} = {outer}")
    return holds


def volume_decrease_measure(us: Sequence[BallFunction], R: int, delta: float) -> VolumeDecreaseReport:
    if not 0 < delta <= 4 / 7:
        raise PreconditionError(f"delta must lie in (0, 4/7], got {delta}")
    r_delta = math.floor(delta * R)
    if r_delta < 1:
        raise PreconditionError(f"delta*R = {delta * R} is below one step")
    if not us:
        raise PreconditionError("need at least one function")
    ball = us[0].ball
    k = len(us)
    inner, outer = volume(us, R), volume(us, 4 * R)
    required_k = 2 * (ball.size_at(2 * R) / ball.size_at(r_delta) + 1)
    reference = (delta * ball.size_at(7 * r_delta) / ball.size_at(r_delta)) ** (k / 2)
    degenerate = outer <= settings.VOLUME_CLAMP_TOL
    if degenerate:
        logger.warning(f"Vol_{4 * R} vanishes; volume ratio is 0/0")
    elif k < required_k:
        logger.info(f"k={k} is below the volume-decrease hypothesis k >= {required_k:.1f}")
    return VolumeDecreaseReport(
        k=k,
        radius=R,
        delta=delta,
        volume_inner=inner,
        volume_outer=outer,
        ratio=None if degenerate else inner / outer,
        degenerate=degenerate,
        reference_factor=reference,
        required_k=required_k,
        hypothesis_holds=k >= required_k,
    )


@timer(logger=logger)
def greedy_dimension(
    candidates: Sequence[BallFunction],
    R: int,
    drop_factor: Optional[float] = None,
) -> Tuple[GramSubspace, int, GreedyDimensionResult]:
    """Greedy volume maximization over candidates.

    Vol(basis + u) = Vol(basis) * dist(u, span(basis)), so each step takes the
    candidate with the largest Q_R-distance to the current span and stops once
    that distance falls to drop_factor.
    """
    if not candidates:
        raise PreconditionError("greedy dimension needs at least one candidate")
    if drop_factor is None:
        drop_factor = settings.DROP_FACTOR
    residual = np.vstack([_centered(u, R) for u in candidates])
    chosen: List[int] = []
    steps: List[GreedyStep] = []
    vol = 1.0
    frame: List[np.ndarray] = []
    while len(chosen) < len(candidates):
        heights = np.linalg.norm(residual, axis=1)
        heights[chosen] = -1.0
        best = int(np.argmax(heights))
        height = float(heights[best])
        if height <= drop_factor:
            logger.debug(f"greedy stop at k={len(chosen)}: best height {height:.3g}")
            break
        q = residual[best] / height
        # second pass keeps the frame orthogonal to working precision
        for e in frame:
            q -= (q @ e) * e
        q /= np.linalg.norm(q)
        frame.append(q)
        residual = residual - np.outer(residual @ q, q)
        chosen.append(best)
        vol *= height
        steps.append(GreedyStep(k=len(chosen), candidate=best, volume=vol, drop_ratio=height))

    basis = GramSubspace([candidates[i] for i in chosen], R)
    result = GreedyDimensionResult(
        dim=len(chosen), radius=R, drop_factor=drop_factor, chosen=chosen, steps=steps
    )
    logger.info(f"greedy dimension {len(chosen)} at R={R} from {len(candidates)} candidates")
    return basis, len(chosen), result


def subspace_distance(u: BallFunction, V: GramSubspace) -> float:
    """Q_R-distance from u to span(V) by base times height, checked against least squares"""
    R = V.radius
    base = volume(V.basis, R)
    if V.dim and base <= settings.VOLUME_CLAMP_TOL:
        raise NumericalFailureError("subspace has vanishing volume")
    distance = volume(list(V.basis) + [u], R) / base
    target = _centered(u, R)
    if V.dim:
        X = V.centered(R)
        coeffs, *_ = np.linalg.lstsq(X.T, target, rcond=None)
        oracle = float(np.linalg.norm(target - X.T @ coeffs))
    else:
        oracle = float(np.linalg.norm(target))
    scale = max(1.0, float(np.linalg.norm(target)))
    if abs(distance - oracle) > 1e-6 * scale:
        logger.error(f"distance {distance} disagrees with least squares {oracle}")
        raise NumericalFailureError(
            "base-times-height distance disagrees with least squares",
            details={"volume_ratio": distance, "least_squares": oracle},
        )
    return distance


def good_scale_from_profile(
    profile: Sequence[ScaleProfileEntry], dim: int, R_0: float, kappa: float
) -> GoodScaleResult:
    """First scale whose determinant grows by at most (1 + R_0^-kappa)^(2 dim)"""
    target = (1 + R_0 ** (-kappa)) ** (2 * dim)
    for entry in profile:
        if entry.ratio is not None and entry.ratio <= target:
            return GoodScaleResult(radius=entry.radius, target=target, profile=list(profile))
    logger.error(f"no good scale among {len(profile)} candidates (target {target:.4g})")
    raise GoodScaleFailure(
        f"no scale with determinant ratio <= {target:.4g}",
        details={"profile": [e.model_dump() for e in profile]},
    )


def good_scale_search(
    V: GramSubspace,
    R_range: Sequence[int],
    kappa: float,
    R_0: Optional[float] = None,
    step: int = 1,
) -> GoodScaleResult:
    if not R_range:
        raise PreconditionError("empty scale range")
    if step < 1 or min(R_range) - step < 1:
        raise PreconditionError("scales must stay at least one step above zero")
    profile = []
    for R in sorted(R_range):
        outer = gram_determinant(gram_matrix(V.basis, R))
        inner = gram_determinant(gram_matrix(V.basis, R - step))
        ratio = outer / inner if inner > 0 else None
        profile.append(ScaleProfileEntry(radius=R, det_inner=inner, det_outer=outer, ratio=ratio))
    return good_scale_from_profile(profile, V.dim, R_0 or max(R_range), kappa)


def lipschitz_coordinates(ball: Ball) -> np.ndarray:
    """Backend coordinate functions that are non-constant and 1-Lipschitz on every edge of the ball"""
    coords = np.array([ball.group.backend.coordinates(g) for g in ball.elements], dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    nbr = ball.neighbour_table()
    inside = nbr >= 0
    rows = np.nonzero(inside)[0]
    keep = []
    for j in range(coords.shape[1]):
        column = coords[:, j]
        if np.ptp(column) == 0:
            continue
        if np.abs(column[nbr[inside]] - column[rows]).max() <= 1 + settings.IDENTITY_TOL:
            keep.append(j)
    return coords[:, keep]


@timer(logger=logger)
def harmonic_candidates(
    ball: Ball,
    count: int,
    seed: Optional[int] = None,
    noise: float = 0.0,
) -> List[BallFunction]:
    """Dirichlet-harmonic, Lipschitz-normalized functions with random affine boundary data"""
    coords = lipschitz_coordinates(ball)
    if coords.shape[1] == 0:
        raise PreconditionError("backend has no Lipschitz coordinate functions on this ball")
    rng = np.random.default_rng(settings.DEFAULT_SEED if seed is None else seed)
    start = ball.size_at(ball.radius - 1)
    sphere = coords[start:]
    out = []
    for _ in range(count):
        weights = rng.normal(size=coords.shape[1])
        boundary = sphere @ weights + rng.normal()
        if noise:
            boundary = boundary + noise * rng.uniform(-1, 1, size=len(boundary))
        u = harmonic_service.dirichlet_solve(ball, boundary)
        lip = harmonic_service.lipschitz_norm(u)
        out.append(u * (1 / lip) if lip > 0 else u)
    return out


def kleiner_constant(S_size: int, d: float, kappa: float, C: float) -> float:
    """(C|S|)^(C d^3 / kappa^2), for display"""
    if kappa <= 0 or C <= 0:
        raise ValidationError("kappa and C must be positive")
    try:
        return math.exp(C * d ** 3 / kappa ** 2 * math.log(C * S_size))
    except OverflowError:
        return math.inf


def export_greedy_csv(result: GreedyDimensionResult, target: Union[str, Path, TextIO]) -> None:
    def write(stream: TextIO) -> None:
        writer = csv.writer(stream, lineterminator="\r\n")
        writer.writerow(["k", "volume", "drop_ratio"])
        for step in result.steps:
            writer.writerow([step.k, repr(step.volume), repr(step.drop_ratio)])

    if isinstance(target, (str, Path)):
        with open(target, "w", newline="", encoding="utf-8") as stream:
            write(stream)
    else:
        write(target)
