"""Real functions and vector fields on enumerated balls, and exact walk measures"""

from fractions import Fraction
from typing import Callable, Dict, List, Optional

import numpy as np

from fgromov.models.backends import Element
from fgromov.models.ball import Ball
from fgromov.models.group import MarkedGroup
from fgromov.utils.errors import NumericalFailureError, SupportEscapeError, ValidationError


def _check_prefix(small: Ball, big: Ball) -> None:
    if small.group is not big.group and small.group.fingerprint() != big.group.fingerprint():
        raise ValidationError("balls belong to different marked groups")
    if len(small) > len(big) or small.keys[-1] != big.keys[len(small) - 1]:
        raise ValidationError(f"{small!r} is not a prefix of {big!r}")


class BallFunction:
    """u: B_S(R) -> R, values indexed by the ball ordering"""

    def __init__(self, ball: Ball, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != (len(ball),):
            raise ValidationError(f"expected {len(ball)} values, got shape {values.shape}")
        if not np.isfinite(values).all():
            raise NumericalFailureError("ball function has non-finite values")
        self.ball = ball
        self.values = values

    @classmethod
    def zeros(cls, ball: Ball) -> "BallFunction":
        return cls(ball, np.zeros(len(ball)))

    @classmethod
    def from_callable(cls, ball: Ball, fn: Callable[[Element], float]) -> "BallFunction":
        return cls(ball, np.fromiter((fn(g) for g in ball.elements), dtype=float, count=len(ball)))

    @classmethod
    def delta(cls, ball: Ball, g: Element) -> "BallFunction":
        values = np.zeros(len(ball))
        values[ball.positions_of([g])[0]] = 1.0
        return cls(ball, values)

    def __call__(self, g: Element) -> float:
        pos = self.ball.position(g)
        return 0.0 if pos is None else float(self.values[pos])

    def __add__(self, other: "BallFunction") -> "BallFunction":
        return BallFunction(self.ball, self.values + other.on(self.ball).values)

    def __sub__(self, other: "BallFunction") -> "BallFunction":
        return BallFunction(self.ball, self.values - other.on(self.ball).values)

    def __mul__(self, scalar: float) -> "BallFunction":
        return BallFunction(self.ball, self.values * scalar)

    __rmul__ = __mul__

    def restrict(self, r: int) -> "BallFunction":
        sub = self.ball.sub_ball(r)
        return BallFunction(sub, self.values[: len(sub)])

    def extend(self, ball: Ball) -> "BallFunction":
        """Zero extension to a larger ball of the same enumeration"""
        _check_prefix(self.ball, ball)
        values = np.zeros(len(ball))
        values[: len(self.ball)] = self.values
        return BallFunction(ball, values)

    def on(self, ball: Ball) -> "BallFunction":
        if ball is self.ball:
            return self
        if len(ball) >= len(self.ball):
            return self.extend(ball)
        _check_prefix(ball, self.ball)
        return BallFunction(ball, self.values[: len(ball)])

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0

    def l1_norm(self) -> float:
        return float(np.abs(self.values).sum())

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def __repr__(self) -> str:
        return f"BallFunction(R={self.ball.radius}, support={len(self.support())})"


class VectorFieldOnBall:
    """F = (F_s)_{s in S} with one column per generator"""

    def __init__(self, ball: Ball, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != (len(ball), ball.group.size):
            raise ValidationError(
                f"expected shape {(len(ball), ball.group.size)}, got {values.shape}"
            )
        if not np.isfinite(values).all():
            raise NumericalFailureError("vector field has non-finite values")
        self.ball = ball
        self.values = values

    def component(self, s: int) -> BallFunction:
        return BallFunction(self.ball, self.values[:, s])

    def pointwise_norms(self) -> np.ndarray:
        """|F(x)| with the Euclidean norm over S"""
        return np.linalg.norm(self.values, axis=1)

    def sup_norm(self) -> float:
        norms = self.pointwise_norms()
        return float(norms.max()) if len(norms) else 0.0

    def l1_norm(self) -> float:
        return float(self.pointwise_norms().sum())

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def on(self, ball: Ball) -> "VectorFieldOnBall":
        if ball is self.ball:
            return self
        if len(ball) >= len(self.ball):
            _check_prefix(self.ball, ball)
            values = np.zeros((len(ball), self.values.shape[1]))
            values[: len(self.ball)] = self.values
            return VectorFieldOnBall(ball, values)
        _check_prefix(ball, self.ball)
        return VectorFieldOnBall(ball, self.values[: len(ball)])


class WalkMeasure:
    """The m-step simple random walk law sigma^(m), with exact rational masses"""

    def __init__(self, group: MarkedGroup, steps: int, masses: Dict[Element, Fraction]):
        self.group = group
        self.steps = steps
        self.masses = dict(sorted(masses.items(), key=lambda item: group.key(item[0])))

    def mass(self, g: Element) -> Fraction:
        return self.masses.get(g, Fraction(0))

    @property
    def support(self) -> List[Element]:
        return list(self.masses)

    def l1_norm(self) -> Fraction:
        return sum(self.masses.values(), Fraction(0))

    def to_function(self, ball: Ball, allow_escape: bool = False) -> BallFunction:
        values = np.zeros(len(ball))
        for g, m in self.masses.items():
            pos: Optional[int] = ball.position(g)
            if pos is None:
                if allow_escape:
                    continue
                raise SupportEscapeError(f"walk of {self.steps} steps leaves the ball of radius {ball.radius}")
            values[pos] = float(m)
        return BallFunction(ball, values)

    def __repr__(self) -> str:
        return f"WalkMeasure(m={self.steps}, support={len(self.masses)})"


class GramSubspace:
    """span(u_1..u_k) with the Gram matrix of Q_R(u, v) = Σ_{x in B(R)} (u(x)-u(id))(v(x)-v(id))"""

    def __init__(self, basis: List[BallFunction], radius: int):
        for u in basis:
            if u.ball.radius < radius and not u.ball.is_whole_group:
                raise SupportEscapeError(f"basis function lives on B({u.ball.radius}), scale is {radius}")
        self.basis = basis
        self.radius = radius
        self.gram = self.centered(radius) @ self.centered(radius).T if basis else np.zeros((0, 0))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def centered(self, radius: int) -> np.ndarray:
        """Rows u_i(x) - u_i(id) over B(radius)"""
        if not self.basis:
            return np.zeros((0, 0))
        return np.vstack([u.values[: u.ball.size_at(radius)] - u.values[0] for u in self.basis])

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.gram).min()) if self.dim else 0.0

    def __repr__(self) -> str:
        return f"GramSubspace(dim={self.dim}, R={self.radius})"


class EllipsoidFrame:
    """Q_R-orthonormal directions e_i with radii λ_i (descending) of an ellipsoid
    E with E ⊆ Ω ⊆ α·E for the sampled body Ω"""

    def __init__(
        self,
        directions: List[BallFunction],
        radii: np.ndarray,
        alpha: float,
        radius: int,
        max_coefficient: float = 0.0,
    ):
        if len(directions) != len(radii):
            raise ValidationError("one radius per direction")
        if len(radii) and np.any(np.diff(radii) > 0):
            raise ValidationError("radii must be sorted in descending order")
        self.directions = directions
        self.radii = np.asarray(radii, dtype=float)
        self.alpha = alpha
        self.radius = radius
        self.max_coefficient = max_coefficient

    @property
    def dim(self) -> int:
        return len(self.directions)

    @property
    def ball(self) -> Ball:
        return self.directions[0].ball

    def scaled(self) -> np.ndarray:
        """Rows λ_i e_i over the frame's ball"""
        return np.vstack([lam * e.values for lam, e in zip(self.radii, self.directions)])

    def __repr__(self) -> str:
        return f"EllipsoidFrame(dim={self.dim}, R={self.radius}, alpha={self.alpha:.3f})"
