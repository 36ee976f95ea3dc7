import io
import math

import numpy as np
import pytest

from fgromov.models import catalog
from fgromov.models.functions import BallFunction, GramSubspace
from fgromov.services import approx_rep_service as ars
from fgromov.services import harmonic_service, kleiner_service
from fgromov.utils.errors import NumericalFailureError, PreconditionError, SupportEscapeError


def _combinations(basis, coefficients):
    out = []
    for row in coefficients:
        values = sum(c * u.values for c, u in zip(row, basis))
        out.append(BallFunction(basis[0].ball, values))
    return out


@pytest.fixture(scope="module")
def z_ball(balls, z1):
    return balls.enumerate_ball(z1, 10)


@pytest.fixture(scope="module")
def z_frame(z_ball):
    x = BallFunction.from_callable(z_ball, lambda g: g[0])
    V = GramSubspace([x], 5)
    return ars.ellipsoid_frame([x, x * -0.5], V, 5)


@pytest.fixture(scope="module")
def quadratic_frame(balls, z1):
    ball = balls.enumerate_ball(z1, 20)
    x = BallFunction.from_callable(ball, lambda g: g[0])
    x2 = BallFunction.from_callable(ball, lambda g: 0.1 * g[0] ** 2)
    V = GramSubspace([x, x2], 5)
    omega = _combinations([x, x2], np.random.default_rng(7).normal(size=(80, 2)))
    return ars.ellipsoid_frame(omega, V, 5)


@pytest.fixture(scope="module")
def heisenberg_frame(heisenberg_ball_8):
    coords = kleiner_service.lipschitz_coordinates(heisenberg_ball_8)
    a = BallFunction(heisenberg_ball_8, coords[:, 0])
    b = BallFunction(heisenberg_ball_8, coords[:, 1])
    V = GramSubspace([a, b], 4)
    omega = _combinations([a, b], np.random.default_rng(11).uniform(-1, 1, size=(80, 2)))
    return ars.ellipsoid_frame(omega, V, 4)


class TestMinimumVolumeEllipsoid:
    def test_square_corners(self):
        points = np.array([[1.0, 1.0], [1.0, -1.0]])
        A = ars.minimum_volume_ellipsoid(points)
        assert A == pytest.approx(np.eye(2) / 2, rel=1e-2)

    def test_encloses_every_point(self, rng):
        points = rng.normal(size=(50, 3))
        A = ars.minimum_volume_ellipsoid(points)
        assert np.einsum("ij,jk,ik->i", points, A, points).max() <= 1 + 1e-12


class TestEllipsoidFrame:
    @pytest.fixture
    def circle(self, balls, z2):
        ball = balls.enumerate_ball(z2, 8)
        x = BallFunction.from_callable(ball, lambda g: g[0])
        y = BallFunction.from_callable(ball, lambda g: g[1])
        n = math.sqrt(kleiner_service.gram_form(x, x, 4))
        return ball, x * (1 / n), y * (1 / n)

    def test_unit_sphere_sample(self, circle):
        _, x, y = circle
        angles = np.linspace(0, 2 * math.pi, 128, endpoint=False)
        omega = _combinations([x, y], np.column_stack([np.cos(angles), np.sin(angles)]))
        frame = ars.ellipsoid_frame(omega, GramSubspace([x, y], 4), 4)
        assert frame.radii == pytest.approx([1.0, 1.0], abs=1e-2)
        assert frame.alpha == pytest.approx(1.0, abs=1e-2)

    def test_box_sample(self, circle):
        _, x, y = circle
        corners = [(2, 1), (2, -1), (-2, 1), (-2, -1), (2, 0), (0, 1)]
        frame = ars.ellipsoid_frame(_combinations([x, y], corners), GramSubspace([x, y], 4), 4)
        assert frame.alpha <= math.sqrt(2) + 0.01
        assert frame.radii == pytest.approx([2.0, 1.0], rel=1e-2)
        # longest axis lies along x
        assert abs(kleiner_service.gram_form(frame.directions[0], x, 4)) == pytest.approx(1.0, abs=1e-2)

    def test_directions_are_orthonormal(self, heisenberg_frame):
        e = heisenberg_frame.directions
        gram = np.array([[kleiner_service.gram_form(u, v, 4) for v in e] for u in e])
        assert np.allclose(gram, np.eye(2), atol=1e-8)
        assert heisenberg_frame.radii[0] >= heisenberg_frame.radii[1]

    def test_rank_deficient_sample(self, circle):
        _, x, y = circle
        with pytest.raises(NumericalFailureError):
            ars.ellipsoid_frame([x, x * 2.0, x * -1.0], GramSubspace([x, y], 4), 4)

    def test_empty_subspace(self, z_ball):
        with pytest.raises(PreconditionError):
            ars.ellipsoid_frame([], GramSubspace([], 3), 3)


class TestTranslationMatrix:
    def test_identity(self, heisenberg_frame, heisenberg):
        U = ars.translation_matrix(heisenberg.identity, heisenberg_frame, 4)
        assert np.allclose(U.as_array(), np.eye(2), atol=1e-8)
        assert max(U.residuals) <= 1e-8

    @pytest.mark.parametrize("g", [1, 3, -4])
    def test_linear_frame_on_integers(self, z_frame, g):
        U = ars.translation_matrix((g,), z_frame, 3)
        assert U.as_array() == pytest.approx(np.eye(1))

    def test_heisenberg_central_element(self, heisenberg_frame):
        c = catalog.heisenberg_center_generator()
        U = ars.translation_matrix(c, heisenberg_frame, 3)
        assert np.allclose(U.as_array(), np.eye(2), atol=1e-8 + max(U.residuals))

    def test_window_escape(self, z_frame):
        with pytest.raises(SupportEscapeError):
            ars.translation_matrix((5,), z_frame, 8)

    def test_quadratic_frame_is_not_trivial(self, quadratic_frame):
        U = ars.translation_matrix((2,), quadratic_frame, 5).as_array()
        assert ars.weighted_deviation(U, quadratic_frame.radii) > 1e-3


class TestMultiplicativity:
    def test_identity_factor(self, quadratic_frame):
        assert ars.multiplicativity_defect((3,), (0,), quadratic_frame, 5) <= 1e-8
        assert ars.multiplicativity_defect((0,), (3,), quadratic_frame, 5) <= 1e-8

    def test_exact_on_polynomial_frame(self, quadratic_frame):
        assert ars.multiplicativity_defect((2,), (-5,), quadratic_frame, 5) <= 1e-6

    def test_abelian_matrices_commute(self, quadratic_frame):
        U_g = ars.translation_matrix((2,), quadratic_frame, 5).as_array()
        U_h = ars.translation_matrix((-3,), quadratic_frame, 5).as_array()
        bound = 2 * (
            ars.multiplicativity_defect((2,), (-3,), quadratic_frame, 5)
            + ars.multiplicativity_defect((-3,), (2,), quadratic_frame, 5)
        )
        assert np.max(np.abs(U_g @ U_h - U_h @ U_g) * quadratic_frame.radii[:, None]) <= bound + 1e-9

    def test_heisenberg_generators(self, heisenberg_frame, heisenberg):
        worst = max(
            ars.multiplicativity_defect(s, t, heisenberg_frame, 4)
            for s in heisenberg.generators
            for t in heisenberg.generators
        )
        assert worst <= 0.1 * heisenberg_frame.radii.min()


class TestCommutatorDefect:
    def test_equal_pair(self, quadratic_frame):
        report = ars.commutator_defect_ratio((2,), (2,), (1,), quadratic_frame, 5)
        assert report.defect_out <= 1e-8
        assert report.defect_in > 0
        assert report.quadratic_ratio is not None

    def test_heisenberg_generators(self, heisenberg_frame, heisenberg):
        x, z = heisenberg.generators[0], heisenberg.generators[1]
        report = ars.commutator_defect_ratio(x, z, heisenberg.identity, heisenberg_frame, 3)
        assert report.defect_out <= 1e-8
        assert report.defect_in <= 1e-8
        assert report.quadratic_ratio is None


class TestBoxPrinciple:
    def test_trivial_frame_on_integers(self, z_frame, z1):
        S_prime, result = ars.box_principle_subgroup(z_frame, 0.1, 3)
        assert sorted(S_prime) == sorted(z1.generators)
        assert result.index_bound == 1
        assert result.radius == 0

    def test_cyclic_index_bounded_by_cells(self, balls):
        group = catalog.cyclic(12)
        ball = balls.enumerate_ball(group, 6)
        c = BallFunction.from_callable(ball, lambda g: group.backend.coordinates(g)[0])
        frame = ars.ellipsoid_frame([c, c * -2.0], GramSubspace([c], 3), 3)
        S_prime, result = ars.box_principle_subgroup(frame, 0.05, 3)
        assert result.index_bound <= len(ball)
        assert result.index_bound == result.cell_counts[result.radius]
        assert len(S_prime) == len(result.generators)

    def test_heisenberg_desk_run(self, heisenberg_frame):
        mesh = 0.05
        S_prime, result = ars.box_principle_subgroup(heisenberg_frame, mesh, 2)
        assert S_prime
        assert result.max_residual <= 10 * mesh

    def test_no_room(self, z_frame):
        with pytest.raises(PreconditionError):
            ars.box_principle_subgroup(z_frame, 0.1, 10)


class TestTrivialDirections:
    def test_linear_with_identity(self, z_ball, z1):
        u = BallFunction.from_callable(z_ball, lambda g: g[0])
        assert ars.trivial_directions_check(u, [z1.identity], 5) == 0

    def test_heisenberg_central_direction(self, balls, heisenberg):
        ball = balls.enumerate_ball(heisenberg, 6)
        start = ball.size_at(5)
        boundary = np.array([g[1] for g in ball.elements[start:]], dtype=float)
        u = harmonic_service.dirichlet_solve(ball, boundary)
        lip = harmonic_service.lipschitz_norm(u)
        c = catalog.heisenberg_center_generator()
        assert ars.trivial_directions_check(u, [c], 2) <= 0.05 * lip * 2

    def test_word_norm_is_a_negative_control(self, balls, heisenberg):
        ball = balls.enumerate_ball(heisenberg, 6)
        u = BallFunction(ball, ball.norms.astype(float))
        lip = harmonic_service.lipschitz_norm(u)
        c = catalog.heisenberg_center_generator()
        assert ars.trivial_directions_check(u, [c], 2) > 0.05 * lip * 2

    def test_window_escape(self, z_ball):
        u = BallFunction.from_callable(z_ball, lambda g: g[0])
        with pytest.raises(SupportEscapeError):
            ars.trivial_directions_check(u, [(3,)], 8)


class TestRange:
    def test_constant(self, z_ball):
        u = BallFunction(z_ball, np.full(len(z_ball), 4.0))
        assert ars.range_lower_bound_measure(u, 5).sup_deviation == 0

    def test_linear(self, z_ball):
        u = BallFunction.from_callable(z_ball, lambda g: g[0])
        assert ars.range_lower_bound_measure(u, 7).ratio == 1.0

    @pytest.mark.slow
    def test_almost_harmonic_on_large_cycle(self):
        group = catalog.cyclic(4096)
        R = 4096 // 8
        u, _ = harmonic_service.build_almost_harmonic(group, R)
        assert ars.range_lower_bound_measure(u, R).ratio >= 0.01


def test_translation_report(quadratic_frame):
    rows = ars.translation_rows(quadratic_frame, [(0,), (1,), (-2,)], 5)
    assert rows[0].deviation <= 1e-8
    stream = io.StringIO()
    ars.export_translation_report(quadratic_frame, rows, stream)
    lines = stream.getvalue().split("\r\n")
    assert lines[0].startswith("lambda,")
    assert lines[1] == "element,norm,deviation,multiplicativity,commutator_ratio"
    assert len([line for line in lines if line]) == 5
