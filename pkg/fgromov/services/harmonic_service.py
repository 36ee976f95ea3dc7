"""Discrete calculus on Cayley balls and almost-harmonic Lipschitz functions"""

import csv
import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Dict, Optional, TextIO, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from fgromov.config import settings
from fgromov.models import catalog
from fgromov.models.backends import Element
from fgromov.models.ball import Ball
from fgromov.models.enums import HarmonicCase
from fgromov.models.functions import BallFunction, VectorFieldOnBall, WalkMeasure
from fgromov.models.group import MarkedGroup
from fgromov.schemas.harmonic import (
    AlmostHarmonicResult,
    CesaroReport,
    HarmonicCheck,
    PoincareCheck,
    ReversePoincareCheck,
)
from fgromov.services.ball_service import BallService, ball_service
from fgromov.utils.errors import (
    NumericalFailureError,
    PreconditionError,
    ResourceLimitError,
    SupportEscapeError,
)
from fgromov.utils.timer import timer

logger = logging.getLogger(__name__)


def interior(ball: Ball) -> Ball:
    """Points x of the ball with xs in the ball for every s"""
    if ball.is_whole_group:
        return ball
    if ball.radius == 0:
        raise PreconditionError("ball of radius 0 has an empty interior")
    return ball.sub_ball(ball.radius - 1)


def _padded(values: np.ndarray) -> np.ndarray:
    # index -1 of the neighbour table lands on the trailing zero
    return np.append(values, 0.0)


def gradient(u: BallFunction, extend_by_zero: bool = False) -> VectorFieldOnBall:
    """∇u(x) = (u(xs) - u(x))_s on the interior, or on the whole ball when u is
    taken to vanish outside it"""
    ball = u.ball
    domain = ball if extend_by_zero else interior(ball)
    nbr = ball.neighbour_table()[: len(domain)]
    vals = _padded(u.values) if extend_by_zero else u.values
    return VectorFieldOnBall(domain, vals[nbr] - u.values[: len(domain), None])


def divergence(F: VectorFieldOnBall, extend_by_zero: bool = False) -> BallFunction:
    """∇·F(x) = Σ_s F_s(x) - F_s(xs^-1), so that Δ = -∇·∇"""
    ball = F.ball
    domain = ball if extend_by_zero else interior(ball)
    n = len(domain)
    nbr = ball.neighbour_table()[:n]
    inv_index = ball.group.inverse_index
    values = F.values
    if extend_by_zero:
        values = np.vstack([values, np.zeros((1, values.shape[1]))])
    shifted = np.empty((n, F.values.shape[1]))
    for s, s_inv in enumerate(inv_index):
        shifted[:, s] = values[nbr[:, s_inv], s]
    return BallFunction(domain, (F.values[:n] - shifted).sum(axis=1))


def laplacian(u: BallFunction, extend_by_zero: bool = False) -> BallFunction:
    """Δu(x) = 2|S|u(x) - 2Σ_s u(xs)"""
    ball = u.ball
    domain = ball if extend_by_zero else interior(ball)
    n = len(domain)
    nbr = ball.neighbour_table()[:n]
    vals = _padded(u.values) if extend_by_zero else u.values
    k = ball.group.size
    return BallFunction(domain, 2 * k * u.values[:n] - 2 * vals[nbr].sum(axis=1))


def laplacian_matrix(ball: Ball) -> scipy.sparse.csr_matrix:
    """Δ on functions supported on the ball, read back on the ball"""
    nbr = ball.neighbour_table()
    n, k = nbr.shape
    rows = np.repeat(np.arange(n), k)
    cols = nbr.ravel()
    keep = cols >= 0
    adjacency = scipy.sparse.csr_matrix(
        (np.full(int(keep.sum()), 2.0), (rows[keep], cols[keep])), shape=(n, n)
    )
    return (scipy.sparse.identity(n, format="csr") * (2.0 * k) - adjacency).tocsr()


def lipschitz_norm(u: BallFunction, extend_by_zero: bool = False) -> float:
    """sup_x |∇u(x)| over the interior"""
    return gradient(u, extend_by_zero).sup_norm()


def eps_harmonic_check(u: BallFunction, eps: float, extend_by_zero: bool = False) -> HarmonicCheck:
    lip = lipschitz_norm(u, extend_by_zero)
    measured = laplacian(u, extend_by_zero).sup_norm()
    holds = lip <= 1 + settings.IDENTITY_TOL and measured <= eps + settings.IDENTITY_TOL
    return HarmonicCheck(lip=lip, eps=measured, target=eps, holds=holds)


def _convolve_values(u: BallFunction, v_ball: Ball, v_values: np.ndarray, working: Ball) -> np.ndarray:
    out = np.zeros((len(working),) + v_values.shape[1:])
    mask = v_values != 0 if v_values.ndim == 1 else (v_values != 0).any(axis=1)
    v_pos = np.flatnonzero(mask)
    if not len(v_pos):
        return out
    v_elems = [v_ball.elements[i] for i in v_pos]
    v_vals = v_values[v_pos]
    mul = working.group.mul
    index = working.index
    for i in u.support():
        y = u.ball.elements[i]
        targets = np.fromiter((index.get(mul(y, z), -1) for z in v_elems), dtype=np.int64, count=len(v_elems))
        if (targets < 0).any():
            raise SupportEscapeError(
                f"convolution support leaves the working ball of radius {working.radius}"
            )
        np.add.at(out, targets, u.values[i] * v_vals)
    return out


def convolve(u: BallFunction, v: BallFunction, working: Ball) -> BallFunction:
    """u*v(x) = Σ_y u(y) v(y^-1 x), computed on the working ball"""
    return BallFunction(working, _convolve_values(u, v.ball, v.values, working))


def convolve_field(f: BallFunction, F: VectorFieldOnBall, working: Ball) -> VectorFieldOnBall:
    """Componentwise f*F_s"""
    return VectorFieldOnBall(working, _convolve_values(f, F.ball, F.values, working))


def walk_measure(group: MarkedGroup, steps: int) -> WalkMeasure:
    """σ^(m) for σ uniform on S, as exact counts over |S|^m"""
    if steps < 0:
        raise PreconditionError(f"step count must be non-negative, got {steps}")
    counts: Dict[Element, int] = {group.identity: 1}
    mul = group.mul
    for _ in range(steps):
        nxt: Dict[Element, int] = {}
        for g, c in counts.items():
            for s in group.generators:
                h = mul(g, s)
                nxt[h] = nxt.get(h, 0) + c
        counts = nxt
    denominator = group.size ** steps
    return WalkMeasure(group, steps, {g: Fraction(c, denominator) for g, c in counts.items()})


def cesaro_average(
    group: MarkedGroup,
    radius: int,
    ball: Optional[Ball] = None,
    service: BallService = ball_service,
) -> Tuple[BallFunction, CesaroReport]:
    """f = (1/(R+1)) Σ_{m=0}^R σ^(m) on B(R+1), with ||Δf||_1 measured"""
    if radius < 1:
        raise PreconditionError(f"radius must be at least 1, got {radius}")
    if ball is None or ball.radius < radius + 1:
        ball = service.enumerate_ball(group, radius + 1)
    ball = ball.sub_ball(radius + 1)
    nbr = ball.neighbour_table()
    k = group.size
    p = np.zeros(len(ball))
    p[0] = 1.0
    total = p.copy()
    for _ in range(radius):
        nxt = np.zeros(len(ball))
        live = np.flatnonzero(p)
        for s in range(k):
            np.add.at(nxt, nbr[live, s], p[live] / k)
        p = nxt
        total += p
    f = BallFunction(ball, total / (radius + 1))
    report = CesaroReport(
        radius=radius,
        l1_norm=f.l1_norm(),
        laplacian_l1=laplacian(f, extend_by_zero=True).l1_norm(),
        laplacian_bound=4 * k / (radius + 1),
    )
    return f, report


def _reflect(field: np.ndarray, source: Ball, target: Ball) -> np.ndarray:
    """H(y) = field(y^-1), placed on the target ball"""
    out = np.zeros(len(target))
    inv = source.group.inv
    for i in np.flatnonzero(field):
        pos = target.position(inv(source.elements[i]))
        if pos is None:
            raise SupportEscapeError(f"reflected support leaves the ball of radius {target.radius}")
        out[pos] = field[i]
    return out


def _measure(u: BallFunction) -> Tuple[float, float, float]:
    grad = gradient(u, extend_by_zero=True)
    lip = grad.sup_norm()
    eps = laplacian(u, extend_by_zero=True).sup_norm()
    return lip, eps, float(grad.pointwise_norms()[0])


@timer(logger=logger)
def build_almost_harmonic(
    group: MarkedGroup,
    radius: int,
    force_case: Optional[int] = None,
    service: BallService = ball_service,
) -> Tuple[BallFunction, AlmostHarmonicResult]:
    """A non-constant almost-harmonic Lipschitz function, or the finite-group outcome.

    Case 1 convolves the Cesaro average f with the sign kernel of its largest
    gradient component. Case 2 projects sqrt(f) onto the low spectrum of the
    Laplacian truncated to B(3R) and convolves the projection with its own
    reflected gradient component.
    """
    if radius < 1:
        raise PreconditionError(f"radius must be at least 1, got {radius}")
    if force_case not in (None, 1, 2):
        raise PreconditionError(f"force_case must be 1 or 2, got {force_case}")
    k = group.size
    eps_bound = k * radius ** (-1 / 3)
    base = service.enumerate_ball(group, radius + 1)

    if base.sphere_sizes[radius + 1] == 0:
        logger.info(f"{group.name}: B({radius}) is the whole group")
        ball = base.sub_ball(radius)
        return BallFunction.zeros(ball), AlmostHarmonicResult(
            case=HarmonicCase.FINITE_GROUP,
            radius=radius,
            working_radius=radius,
            lip=0.0,
            eps=0.0,
            eps_bound=eps_bound,
            grad_at_id=0.0,
        )

    f, cesaro = cesaro_average(group, radius, base, service)
    grad_f = gradient(f, extend_by_zero=True)
    gradient_l1 = grad_f.l1_norm()
    threshold = radius ** (-2 / 3)
    case = force_case or (1 if gradient_l1 >= threshold else 2)
    logger.info(f"{group.name}: ||∇f||_1 = {gradient_l1:.4g} against R^(-2/3) = {threshold:.4g}, case {case}")

    projection_rank: Optional[int] = None
    if case == 1:
        working = service.enumerate_ball(group, 2 * radius + 2)
        s_star = int(np.argmax(np.abs(grad_f.values).sum(axis=0)))
        kernel = np.sign(grad_f.values[:, s_star]) / gradient_l1
        h = BallFunction(working, _reflect(kernel, base, working))
        u = convolve(h, f, working)
        tag = HarmonicCase.NON_AMENABLE
    else:
        working = service.enumerate_ball(group, 6 * radius + 2)
        window = working.sub_ball(3 * radius)
        if len(window) > settings.DENSE_SOLVE_LIMIT:
            raise ResourceLimitError(f"dense spectral projection on B({3 * radius})", settings.DENSE_SOLVE_LIMIT)
        F = np.zeros(len(window))
        F[: len(f.values)] = np.sqrt(f.values)
        evals, evecs = np.linalg.eigh(laplacian_matrix(window).toarray())
        low = evecs[:, evals <= eps_bound]
        projection_rank = low.shape[1]
        F_prime = low @ (low.T @ F)
        if np.linalg.norm(F_prime) < settings.PROJECTION_NORM_FLOOR:
            logger.error(f"{group.name}: spectral projection of sqrt(f) vanishes")
            raise NumericalFailureError(
                "spectral projection is numerically degenerate",
                details={"projection_rank": projection_rank},
            )
        F_fn = BallFunction(window, F_prime).extend(working.sub_ball(3 * radius + 1))
        grad_F = gradient(F_fn, extend_by_zero=True)
        norm2 = float((grad_F.values ** 2).sum())
        if norm2 < settings.PROJECTION_NORM_FLOOR:
            raise NumericalFailureError("projected function is numerically constant")
        s_star = int(np.argmax((grad_F.values ** 2).sum(axis=0)))
        H = BallFunction(working, _reflect(grad_F.values[:, s_star] / norm2, grad_F.ball, working))
        u = convolve(H, F_fn, working)
        tag = HarmonicCase.AMENABLE

    lip, eps, grad_at_id = _measure(u)
    if lip > 1:
        logger.warning(f"{group.name}: rescaling u by 1/{lip:.6f} to restore lip <= 1")
        u = u * (1 / lip)
        eps, grad_at_id, lip = eps / lip, grad_at_id / lip, 1.0
    result = AlmostHarmonicResult(
        case=tag,
        radius=radius,
        working_radius=working.radius,
        lip=lip,
        eps=eps,
        eps_bound=eps_bound,
        grad_at_id=grad_at_id,
        gradient_l1=gradient_l1,
        generator_index=s_star,
        laplacian_l1=cesaro.laplacian_l1,
        projection_rank=projection_rank,
        eps_exponent=math.log(eps) / math.log(radius) if eps > 0 and radius > 1 else None,
    )
    logger.info(f"{group.name}: almost-harmonic u with lip={lip:.4f}, eps={eps:.4g}, |∇u(id)|={grad_at_id:.4f}")
    return u, result


@timer(logger=logger)
def dirichlet_solve(ball: Ball, boundary: np.ndarray) -> BallFunction:
    """Harmonic extension of boundary values on the outer sphere"""
    boundary = np.asarray(boundary, dtype=float)
    R = ball.radius
    n_inner = ball.size_at(R - 1) if R > 0 else 0
    n_sphere = len(ball) - n_inner
    if R == 0 or n_sphere == 0:
        raise PreconditionError("Dirichlet problem needs a non-empty interior and boundary sphere")
    if boundary.shape != (n_sphere,):
        raise PreconditionError(f"expected {n_sphere} boundary values, got shape {boundary.shape}")

    k = ball.group.size
    nbr = ball.neighbour_table()[:n_inner]
    rows = np.repeat(np.arange(n_inner), k)
    cols = nbr.ravel()
    inner = cols < n_inner
    A = scipy.sparse.csr_matrix(
        (np.ones(int(inner.sum())), (rows[inner], cols[inner])), shape=(n_inner, n_inner)
    )
    M = (scipy.sparse.identity(n_inner, format="csr") * float(k) - A).tocsr()
    rhs = np.zeros(n_inner)
    np.add.at(rhs, rows[~inner], boundary[cols[~inner] - n_inner])

    if n_inner <= settings.DENSE_SOLVE_LIMIT:
        solution = scipy.linalg.solve(M.toarray(), rhs, assume_a="sym")
    else:
        solution, info = scipy.sparse.linalg.cg(M, rhs, rtol=settings.CG_RTOL, maxiter=50 * n_inner)
        if info != 0:
            raise NumericalFailureError(f"conjugate gradient did not converge (info={info})")

    u = BallFunction(ball, np.concatenate([solution, boundary]))
    residual = float(np.abs(laplacian(u).values[:n_inner]).max())
    scale = max(1.0, float(np.abs(boundary).max()))
    if residual > settings.DIRICHLET_RESIDUAL_TOL * scale:
        logger.error(f"Dirichlet residual {residual:.3g} on B({R})")
        raise NumericalFailureError(f"Dirichlet residual {residual:.3g} exceeds tolerance")
    logger.debug(f"Dirichlet solve on B({R}): {n_inner} unknowns, residual {residual:.3g}")
    return u


def _window(u: BallFunction, x: Element, r: int) -> np.ndarray:
    return u.ball.sub_ball(r).translate_positions(x, u.ball)


def poincare_check(f: BallFunction, x: Element, r: int) -> PoincareCheck:
    """||f - f_B(x,r)||_2 on B(x,r) against 2r |B(2r)|/|B(r)| ||∇f||_2 on B(x,3r)"""
    if r < 1:
        raise PreconditionError(f"radius must be at least 1, got {r}")
    ball = f.ball
    if ball.radius < 3 * r + 1 and not ball.is_whole_group:
        raise SupportEscapeError(f"B(x, {3 * r + 1}) needs a ball of radius {3 * r + 1}, have {ball.radius}")
    inner = _window(f, x, r)
    outer = _window(f, x, 3 * r)
    vals = f.values[inner]
    lhs = float(np.linalg.norm(vals - vals.mean()))
    nbr = ball.neighbour_table()[outer]
    if (nbr < 0).any():
        raise SupportEscapeError("gradient window leaves the ball")
    grad = f.values[nbr] - f.values[outer, None]
    rhs = 2 * r * ball.size_at(2 * r) / ball.size_at(r) * float(np.linalg.norm(grad))
    holds = lhs <= rhs + settings.IDENTITY_TOL
    if not holds:
        logger.error(f"Poincaré inequality fails: {lhs} > {rhs}")
    return PoincareCheck(lhs=lhs, rhs=rhs, holds=holds)


def reverse_poincare_check(
    f: BallFunction,
    x: Element,
    r: int,
    c_probe: float,
    eps: Optional[float] = None,
) -> ReversePoincareCheck:
    """Measure the smallest constant C with ||∇f||_{B(x,r)} <= C |S| (||f||_{B(x,2r)}/r + eps r |B(2r)|^(1/2)).

    eps defaults to ||Δf||_∞ measured on B(x, 2r).
    """
    if r < 1:
        raise PreconditionError(f"radius must be at least 1, got {r}")
    ball = f.ball
    if ball.radius < 2 * r + 1 and not ball.is_whole_group:
        raise SupportEscapeError(f"B(x, {2 * r + 1}) needs a ball of radius {2 * r + 1}, have {ball.radius}")
    k = ball.group.size
    inner = _window(f, x, r)
    outer = _window(f, x, 2 * r)
    table = ball.neighbour_table()
    if (table[outer] < 0).any():
        raise SupportEscapeError("gradient window leaves the ball")
    grad = f.values[table[inner]] - f.values[inner, None]
    lhs = float(np.linalg.norm(grad))
    if eps is None:
        eps = float(np.abs(2 * k * f.values[outer] - 2 * f.values[table[outer]].sum(axis=1)).max())
    base = float(np.linalg.norm(f.values[outer])) / r + eps * r * math.sqrt(ball.size_at(2 * r))
    scale = k * base
    if lhs == 0:
        c_min = 0.0
    elif scale == 0:
        c_min = math.inf
    else:
        c_min = lhs / scale
    rhs = c_probe * scale
    return ReversePoincareCheck(lhs=lhs, rhs=rhs, holds=lhs <= rhs, c_probe=c_probe, c_min=c_min, eps=eps)


def sine_test_function(N: int, service: BallService = ball_service) -> BallFunction:
    """(N/2π) sin(2πx/N) on Z/N, an O(1/N)-harmonic Lipschitz function"""
    if N < 3:
        raise PreconditionError(f"modulus must be at least 3, got {N}")
    ball = service.enumerate_ball(catalog.cyclic(N), N // 2)
    return BallFunction.from_callable(ball, lambda x: N / (2 * math.pi) * math.sin(2 * math.pi * x / N))


def export_csv(u: BallFunction, target: Union[str, Path, TextIO]) -> None:
    """One row per ball element: canonical key (hex), norm, value"""
    def write(stream: TextIO) -> None:
        writer = csv.writer(stream, lineterminator="\r\n")
        writer.writerow(["key", "norm", "value"])
        for key, norm, value in zip(u.ball.keys, u.ball.norms, u.values):
            writer.writerow([key.hex(), int(norm), repr(float(value))])

    if isinstance(target, (str, Path)):
        with open(target, "w", newline="", encoding="utf-8") as stream:
            write(stream)
    else:
        write(target)
