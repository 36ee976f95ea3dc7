"""Ellipsoid frames on the harmonic space, translation matrices and the box principle"""

import csv
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
from scipy.optimize import linprog

from fgromov.config import settings
from fgromov.models.backends import Element
from fgromov.models.ball import Ball
from fgromov.models.functions import BallFunction, EllipsoidFrame, GramSubspace
from fgromov.schemas.approx_rep import (
    BoxPrincipleResult,
    CommutatorDefect,
    RangeReport,
    TranslationMatrix,
    TranslationRow,
)
from fgromov.services import kleiner_service
from fgromov.utils.errors import (
    NumericalFailureError,
    PigeonholeFailure,
    PreconditionError,
    SupportEscapeError,
)
from fgromov.utils.timer import timer

logger = logging.getLogger(__name__)

KHACHIYAN_MAX_ITER = 10_000


def minimum_volume_ellipsoid(points: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """Origin-centred enclosing ellipsoid {x : x^T A x <= 1} of ±points.

    Khachiyan reweighting; the volume is within a factor 1 + tol of the minimum.
    """
    if tol is None:
        tol = settings.MVEE_TOL
    m, D = points.shape
    weights = np.full(m, 1.0 / m)
    for it in range(KHACHIYAN_MAX_ITER):
        X = points.T @ (weights[:, None] * points)
        M = np.einsum("ij,jk,ik->i", points, np.linalg.inv(X), points)
        j = int(np.argmax(M))
        if M[j] <= D * (1 + tol):
            break
        step = (M[j] - D) / (D * (M[j] - 1))
        weights *= 1 - step
        weights[j] += step
    else:
        logger.warning(f"MVEE reweighting stopped after {KHACHIYAN_MAX_ITER} iterations")
    X_inv = np.linalg.inv(X)
    M = np.einsum("ij,jk,ik->i", points, X_inv, points)
    logger.debug(f"MVEE converged in {it} iterations, max leverage {M.max():.4f} (D={D})")
    return X_inv / M.max()


def _hull_extent(points: np.ndarray, direction: np.ndarray) -> float:
    """Largest t with t*direction in the symmetric convex hull of the points"""
    m, D = points.shape
    c = np.zeros(1 + 2 * m)
    c[0] = -1.0
    A_eq = np.hstack([-direction[:, None], points.T, -points.T])
    A_ub = np.concatenate([[0.0], np.ones(2 * m)])[None, :]
    res = linprog(c, A_ub=A_ub, b_ub=[1.0], A_eq=A_eq, b_eq=np.zeros(D), bounds=(0, None), method="highs")
    if not res.success:
        raise NumericalFailureError(f"hull extent LP failed: {res.message}")
    return float(res.x[0])


def _orthonormal_rows(V: GramSubspace, R_1: int) -> np.ndarray:
    mu, W = np.linalg.eigh(V.gram if V.radius == R_1 else GramSubspace(V.basis, R_1).gram)
    if mu.min() <= settings.VOLUME_CLAMP_TOL:
        raise NumericalFailureError("subspace basis is degenerate at this scale", details={"eigenvalues": mu.tolist()})
    full = np.vstack([u.values - u.values[0] for u in V.basis])
    return (W / np.sqrt(mu)).T @ full


def omega_sample(ball: Ball, dim: int, seed: Optional[int] = None) -> List[BallFunction]:
    """Random Lipschitz-normalized harmonic functions standing in for the body Ω"""
    return kleiner_service.harmonic_candidates(ball, settings.OMEGA_SAMPLE_FACTOR * dim * dim, seed=seed)


@timer(logger=logger)
def ellipsoid_frame(omega: Sequence[BallFunction], V: GramSubspace, R_1: int) -> EllipsoidFrame:
    if V.dim == 0:
        raise PreconditionError("ellipsoid frame needs a non-trivial subspace")
    ball = V.basis[0].ball
    E = _orthonormal_rows(V, R_1)
    n = ball.size_at(R_1)
    P = np.vstack([E[:, :n] @ (u.values[:n] - u.values[0]) for u in omega])
    sv = np.linalg.svd(P, compute_uv=False)
    if len(omega) < V.dim or sv[-1] < settings.SPAN_SINGULAR_FLOOR * max(1.0, sv[0]):
        logger.error(f"sample of {len(omega)} functions does not span the {V.dim}-dimensional space")
        raise NumericalFailureError(
            "Ω sample is degenerate", details={"singular_values": sv.tolist()}
        )

    A = minimum_volume_ellipsoid(P)
    mu, axes = np.linalg.eigh(A)
    semi = 1 / np.sqrt(mu)  # descending, since mu ascends
    extents = np.array([_hull_extent(P, semi[i] * axes[:, i]) for i in range(V.dim)])
    alpha = 1 / extents.min()
    radii = semi / alpha
    coefficients = (P @ axes) / radii
    directions = [BallFunction(ball, axes[:, i] @ E) for i in range(V.dim)]
    frame = EllipsoidFrame(
        directions, radii, float(alpha), R_1, max_coefficient=float(np.abs(coefficients).max())
    )
    logger.info(f"ellipsoid frame: dim={V.dim}, alpha={alpha:.4f}, radii={np.round(radii, 4).tolist()}")
    return frame


def _window(frame: EllipsoidFrame, R: int) -> Ball:
    if R > frame.ball.radius:
        raise SupportEscapeError(f"window B({R}) exceeds the frame's ball B({frame.ball.radius})")
    return frame.ball.sub_ball(R)


def translation_matrix(g: Element, frame: EllipsoidFrame, R: int) -> TranslationMatrix:
    """Least-squares coefficients of ρ(g)(λ_i e_i) against {λ_j e_j} and constants over B(R)"""
    window = _window(frame, R)
    group = frame.ball.group
    positions = window.translate_positions(group.inv(g), frame.ball)
    scaled = frame.scaled()
    design = np.hstack([scaled[:, : len(window)].T, np.ones((len(window), 1))])
    sv = np.linalg.svd(design, compute_uv=False)
    if sv[-1] < settings.SPAN_SINGULAR_FLOOR * sv[0]:
        raise NumericalFailureError(f"frame is degenerate on the window B({R})")
    targets = scaled[:, positions].T
    coef, *_ = np.linalg.lstsq(design, targets, rcond=None)
    residuals = np.linalg.norm(design @ coef - targets, axis=0)
    return TranslationMatrix(
        g=group.backend.to_row(g),
        t=coef[: frame.dim].tolist(),
        residuals=residuals.tolist(),
        window=R,
    )


def weighted_deviation(U: np.ndarray, radii: np.ndarray, reference: Optional[np.ndarray] = None) -> float:
    """max_(k,i) |U - ref|_(k,i) min(1, λ_i/λ_k)"""
    if reference is None:
        reference = np.eye(len(radii))
    weights = np.minimum(1.0, radii[None, :] / radii[:, None])
    return float(np.max(np.abs(U - reference) * weights)) if len(radii) else 0.0


def multiplicativity_defect(g: Element, h: Element, frame: EllipsoidFrame, R: int) -> float:
    """max_(k,i) |(U_gh - U_g U_h)_(k,i)| λ_k"""
    mul = frame.ball.group.mul
    U_g = translation_matrix(g, frame, R).as_array()
    U_h = translation_matrix(h, frame, R).as_array()
    U_gh = translation_matrix(mul(g, h), frame, R).as_array()
    return float(np.max(np.abs(U_gh - U_g @ U_h) * frame.radii[:, None]))


def commutator_defect_ratio(
    e: Element, e_prime: Element, g: Element, frame: EllipsoidFrame, R: int
) -> CommutatorDefect:
    group = frame.ball.group

    def deviation(x: Element) -> float:
        return weighted_deviation(translation_matrix(x, frame, R).as_array(), frame.radii)

    defect_in = max(deviation(e), deviation(e_prime))
    conjugate = group.mul(group.mul(g, group.backend.commutator(e, e_prime)), group.inv(g))
    defect_out = deviation(conjugate)
    ratio = defect_out / defect_in ** 2 if defect_in > settings.IDENTITY_TOL else None
    logger.debug(f"commutator defect: in={defect_in:.3g}, out={defect_out:.3g}, ratio={ratio}")
    return CommutatorDefect(defect_in=defect_in, defect_out=defect_out, quadratic_ratio=ratio)


@timer(logger=logger)
def box_principle_subgroup(
    frame: EllipsoidFrame,
    mesh: float,
    R: int,
    max_radius: Optional[int] = None,
) -> Tuple[List[Element], BoxPrincipleResult]:
    """Cover {U_g : g in B(r)} by mesh-cells until B(r+1) occupies no new cell.

    Every g in B(r+1) then lies in G'·g_m for the centre g_m of its cell.
    """
    if mesh <= 0:
        raise PreconditionError("mesh must be positive")
    ball = frame.ball
    group = ball.group
    limit = ball.radius if ball.is_whole_group else (ball.radius - R - 1) // 2
    if max_radius is not None:
        limit = min(limit, max_radius)
    if limit < 0:
        raise PreconditionError(f"B({ball.radius}) leaves no room for words around the window B({R})")

    centres: List[Tuple[int, np.ndarray]] = []
    cell_of: Dict[int, int] = {}
    cache: Dict[int, np.ndarray] = {}

    def matrix(pos: int) -> np.ndarray:
        if pos not in cache:
            cache[pos] = translation_matrix(ball.elements[pos], frame, R).as_array()
        return cache[pos]

    def process(upto: int) -> int:
        for pos in range(len(cell_of), ball.size_at(upto)):
            U = matrix(pos)
            for c, (_, centre) in enumerate(centres):
                if weighted_deviation(U, frame.radii, centre) <= mesh:
                    cell_of[pos] = c
                    break
            else:
                cell_of[pos] = len(centres)
                centres.append((pos, U))
        return len(centres)

    counts = [process(0)]
    found = None
    for r in range(limit + 1):
        counts.append(process(r + 1))
        if counts[r + 1] == counts[r]:
            found = r
            break
    if found is None:
        logger.error(f"box principle: cell counts {counts} never stabilise")
        raise PigeonholeFailure(
            f"mesh cells keep growing up to radius {len(counts) - 1}", details={"cell_counts": counts}
        )

    identity = group.identity
    words = {}
    for pos in range(ball.size_at(found + 1)):
        g = ball.elements[pos]
        g_m = ball.elements[centres[cell_of[pos]][0]]
        for w in (group.mul(g, group.inv(g_m)), group.mul(g_m, group.inv(g))):
            if w != identity:
                words[group.key(w)] = w
    S_prime = [words[k] for k in sorted(words)]
    residuals = [
        weighted_deviation(translation_matrix(w, frame, R).as_array(), frame.radii) for w in S_prime
    ]
    result = BoxPrincipleResult(
        radius=found,
        mesh=mesh,
        index_bound=counts[found],
        cell_counts=counts,
        generators=[group.backend.to_row(w) for w in S_prime],
        residuals=residuals,
        max_residual=max(residuals, default=0.0),
    )
    logger.info(f"box principle: r={found}, index <= {result.index_bound}, |S'|={len(S_prime)}")
    return S_prime, result


def trivial_directions_check(u: BallFunction, S_derived: Sequence[Element], window: int) -> float:
    """max over e in S_derived and x in B(window) of |u(ex) - u(x)|"""
    if window > u.ball.radius:
        raise SupportEscapeError(f"window B({window}) exceeds B({u.ball.radius})")
    inner = u.ball.sub_ball(window)
    base = u.values[: len(inner)]
    worst = 0.0
    for e in S_derived:
        positions = inner.translate_positions(e, u.ball)
        worst = max(worst, float(np.max(np.abs(u.values[positions] - base))))
    return worst


def range_lower_bound_measure(u: BallFunction, R: int) -> RangeReport:
    if R < 1:
        raise PreconditionError("range is measured on balls of radius at least 1")
    if R > u.ball.radius and not u.ball.is_whole_group:
        raise SupportEscapeError(f"B({R}) exceeds B({u.ball.radius})")
    values = u.values[: u.ball.size_at(R)]
    sup = float(np.max(np.abs(values - values[0])))
    return RangeReport(radius=R, sup_deviation=sup, ratio=sup / R)


def translation_rows(frame: EllipsoidFrame, elements: Sequence[Element], R: int) -> List[TranslationRow]:
    group = frame.ball.group
    rows = []
    for g in elements:
        U = translation_matrix(g, frame, R).as_array()
        multiplicativity = max(multiplicativity_defect(g, s, frame, R) for s in group.generators)
        rows.append(
            TranslationRow(
                element=group.key(g).hex(),
                norm=frame.ball.norm_of(g),
                deviation=weighted_deviation(U, frame.radii),
                multiplicativity=multiplicativity,
            )
        )
    return rows


def export_translation_report(
    frame: EllipsoidFrame,
    rows: Sequence[TranslationRow],
    target: Union[str, Path, TextIO],
) -> None:
    def write(stream: TextIO) -> None:
        writer = csv.writer(stream, lineterminator="\r\n")
        writer.writerow(["lambda"] + [repr(float(lam)) for lam in frame.radii])
        writer.writerow(["element", "norm", "deviation", "multiplicativity", "commutator_ratio"])
        for row in rows:
            ratio = "" if row.commutator_ratio is None else repr(row.commutator_ratio)
            writer.writerow([row.element, row.norm, repr(row.deviation), repr(row.multiplicativity), ratio])

    if isinstance(target, (str, Path)):
        with open(target, "w", newline="", encoding="utf-8") as stream:
            write(stream)
    else:
        write(target)
