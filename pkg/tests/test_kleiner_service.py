import io
import math

import numpy as np
import pytest

from fgromov.models.functions import BallFunction, GramSubspace
from fgromov.schemas.kleiner import ScaleProfileEntry
from fgromov.services import kleiner_service as ks
from fgromov.utils.errors import GoodScaleFailure, PreconditionError, SupportEscapeError


@pytest.fixture(scope="module")
def z_ball(balls, z1):
    return balls.enumerate_ball(z1, 10)


@pytest.fixture(scope="module")
def z2_ball(balls, z2):
    return balls.enumerate_ball(z2, 64)


def _fn(ball, fn):
    return BallFunction.from_callable(ball, fn)


class TestGramCalculus:
    def test_gram_form_on_integers(self, z_ball):
        x = _fn(z_ball, lambda g: g[0])
        assert ks.gram_form(x, x, 2) == 10

    def test_gram_form_is_symmetric(self, z_ball, rng):
        u = BallFunction(z_ball, rng.normal(size=len(z_ball)))
        v = BallFunction(z_ball, rng.normal(size=len(z_ball)))
        assert ks.gram_form(u, v, 6) == pytest.approx(ks.gram_form(v, u, 6))

    def test_gram_form_ignores_constants(self, z_ball):
        x = _fn(z_ball, lambda g: g[0])
        shifted = _fn(z_ball, lambda g: g[0] + 7.0)
        assert ks.gram_form(shifted, shifted, 4) == ks.gram_form(x, x, 4)

    def test_scale_beyond_ball(self, z_ball):
        x = _fn(z_ball, lambda g: g[0])
        with pytest.raises(SupportEscapeError):
            ks.gram_form(x, x, 11)


class TestVolume:
    def test_linear_and_square(self, z_ball):
        x = _fn(z_ball, lambda g: g[0])
        x2 = _fn(z_ball, lambda g: g[0] ** 2)
        assert ks.volume([x, x2], 2) == pytest.approx(math.sqrt(340))

    def test_duplicate_is_degenerate(self, z_ball):
        x = _fn(z_ball, lambda g: g[0])
        assert ks.volume([x, x], 3) == pytest.approx(0, abs=1e-6)

    def test_orthonormal_pair(self, z_ball):
        R = 3
        x = _fn(z_ball, lambda g: g[0])
        x2 = _fn(z_ball, lambda g: g[0] ** 2)
        e1 = x * (1 / math.sqrt(ks.gram_form(x, x, R)))
        e2 = x2 * (1 / math.sqrt(ks.gram_form(x2, x2, R)))
        assert ks.volume([e1, e2], R) == pytest.approx(1.0)

    def test_permutation_and_scaling(self, z_ball):
        x = _fn(z_ball, lambda g: g[0])
        x2 = _fn(z_ball, lambda g: g[0] ** 2)
        x3 = _fn(z_ball, lambda g: g[0] ** 3)
        base = ks.volume([x, x2, x3], 4)
        assert ks.volume([x3, x, x2], 4) == pytest.approx(base)
        assert ks.volume([x * 2.0, x2, x3 * -0.5], 4) == pytest.approx(base)

    def test_empty_family(self, z_ball):
        assert ks.volume([], 3) == 1.0

    def test_monotone_in_the_scale(self, z2_ball, rng):
        ball = z2_ball.sub_ball(8)
        for _ in range(20):
            us = [BallFunction(ball, rng.normal(size=len(ball))) for _ in range(3)]
            assert ks.volume_monotonicity_check(us, 2)


class TestVolumeDecrease:
    def test_single_function_ratio(self, z2_ball):
        x = _fn(z2_ball, lambda g: g[0])
        report = ks.volume_decrease_measure([x], 16, 0.25)
        assert report.ratio is not None and report.ratio <= 1
        assert not report.hypothesis_holds
        assert report.required_k == pytest.approx(2 * (z2_ball.size_at(32) / z2_ball.size_at(4) + 1))

    def test_duplicates_report_zero_over_zero(self, z2_ball):
        ball = z2_ball.sub_ball(8)
        c = BallFunction(ball, np.ones(len(ball)))
        report = ks.volume_decrease_measure([c, c], 2, 0.5)
        assert report.degenerate
        assert report.ratio is None

    def test_invariant_under_unimodular_recombination(self, z2_ball):
        x = _fn(z2_ball, lambda g: g[0])
        y = _fn(z2_ball, lambda g: g[1])
        a = ks.volume_decrease_measure([x, y], 16, 0.25)
        b = ks.volume_decrease_measure([x + y, y], 16, 0.25)
        assert a.ratio == pytest.approx(b.ratio)

    @pytest.mark.parametrize("delta", [0.0, 0.6])
    def test_delta_range(self, z2_ball, delta):
        x = _fn(z2_ball, lambda g: g[0])
        with pytest.raises(PreconditionError):
            ks.volume_decrease_measure([x], 16, delta)


class TestGreedyDimension:
    def test_equal_candidates(self, z_ball):
        x = _fn(z_ball, lambda g: g[0])
        _, dim, result = ks.greedy_dimension([x, x, x], 5)
        assert dim == 1
        assert result.chosen == [0]

    def test_multiples_of_one_function(self, z_ball):
        cands = [_fn(z_ball, lambda g, c=c: c * g[0]) for c in (1.0, 2.0, -1.0)]
        basis, dim, result = ks.greedy_dimension(cands, 5)
        assert dim == 1
        assert result.chosen == [1]
        assert basis.dim == 1

    def test_constants_have_dimension_zero(self, z_ball):
        c = BallFunction(z_ball, np.full(len(z_ball), 2.0))
        _, dim, _ = ks.greedy_dimension([c], 5)
        assert dim == 0

    def test_volume_is_product_of_heights(self, z_ball):
        cands = [_fn(z_ball, lambda g, p=p: float(g[0]) ** p) for p in (1, 2, 3)]
        basis, dim, result = ks.greedy_dimension(cands, 4)
        assert dim == 3
        assert result.steps[-1].volume == pytest.approx(ks.volume(basis.basis, 4))

    def test_heisenberg_small(self, heisenberg_ball_8):
        ball = heisenberg_ball_8.sub_ball(5)
        cands = ks.harmonic_candidates(ball, 6, seed=3)
        _, dim, _ = ks.greedy_dimension(cands, 5)
        assert dim == 2

    @pytest.mark.slow
    def test_heisenberg_forty_candidates(self, heisenberg_ball_8):
        cands = ks.harmonic_candidates(heisenberg_ball_8, 40, seed=0)
        _, dim, result = ks.greedy_dimension(cands, 8)
        assert dim == 2
        assert len(result.steps) == 2


def _central(ball):
    from fgromov.services import harmonic_service

    c = _fn(ball, lambda g: float(g[2]))
    return c * (1 / harmonic_service.lipschitz_norm(c))


class TestDimensionFollowsTheCandidates:
    def test_affine_candidates_lie_in_the_coordinate_span(self, heisenberg_ball_8):
        ball = heisenberg_ball_8.sub_ball(5)
        cands = ks.harmonic_candidates(ball, 6, seed=3)
        affine = np.column_stack([np.ones(len(ball)), ks.lipschitz_coordinates(ball)])
        for u in cands:
            coeffs, *_ = np.linalg.lstsq(affine, u.values, rcond=None)
            assert np.abs(affine @ coeffs - u.values).max() < 1e-8

    def test_central_coordinate_is_harmonic_and_raises_the_dimension(self, heisenberg_ball_8):
        from fgromov.services import harmonic_service

        ball = heisenberg_ball_8.sub_ball(5)
        c = _central(ball)
        assert harmonic_service.eps_harmonic_check(c, 1e-9).holds
        cands = ks.harmonic_candidates(ball, 6, seed=3)
        _, dim, result = ks.greedy_dimension(cands + [c], 5)
        assert dim == 3
        assert 6 in result.chosen

    def test_drop_factor_decides_where_the_greedy_stops(self, heisenberg_ball_8):
        ball = heisenberg_ball_8.sub_ball(5)
        cands = ks.harmonic_candidates(ball, 6, seed=3) + [_central(ball)]
        _, _, full = ks.greedy_dimension(cands, 5)
        heights = [step.drop_ratio for step in full.steps]
        assert heights == sorted(heights, reverse=True)
        threshold = heights[-1] * 1.01
        _, dim, _ = ks.greedy_dimension(cands, 5, drop_factor=threshold)
        assert dim == sum(h > threshold for h in heights) < full.dim

    @pytest.mark.slow
    def test_noisy_boundary_data_is_not_collapsed(self, heisenberg_ball_8):
        cands = ks.harmonic_candidates(heisenberg_ball_8, 12, seed=0, noise=0.5)
        _, dim, _ = ks.greedy_dimension(cands, 8)
        assert dim > 2


class TestHarmonicCandidates:
    def test_heisenberg_coordinates(self, heisenberg_ball_8):
        coords = ks.lipschitz_coordinates(heisenberg_ball_8.sub_ball(4))
        assert coords.shape[1] == 2

    def test_candidates_are_lipschitz_normalized(self, heisenberg_ball_8):
        from fgromov.services import harmonic_service

        for u in ks.harmonic_candidates(heisenberg_ball_8.sub_ball(4), 3, seed=1):
            assert harmonic_service.lipschitz_norm(u) == pytest.approx(1.0)

    def test_same_seed_same_candidates(self, z_ball):
        a = ks.harmonic_candidates(z_ball, 2, seed=9, noise=0.1)
        b = ks.harmonic_candidates(z_ball, 2, seed=9, noise=0.1)
        assert all(np.array_equal(u.values, v.values) for u, v in zip(a, b))


class TestSubspaceDistance:
    def test_in_span(self, z_ball):
        x = _fn(z_ball, lambda g: g[0])
        V = GramSubspace([x], 3)
        assert ks.subspace_distance(x * 2.0, V) == pytest.approx(0, abs=1e-5)

    def test_orthogonal(self, z_ball):
        x = _fn(z_ball, lambda g: g[0])
        x2 = _fn(z_ball, lambda g: g[0] ** 2)
        V = GramSubspace([x], 3)
        assert ks.subspace_distance(x2, V) == pytest.approx(14.0)

    def test_random_matches_least_squares(self, z2_ball, rng):
        ball = z2_ball.sub_ball(6)
        basis = [BallFunction(ball, rng.normal(size=len(ball))) for _ in range(3)]
        V = GramSubspace(basis, 6)
        u = BallFunction(ball, rng.normal(size=len(ball)))
        X = V.centered(6)
        target = u.values - u.values[0]
        coeffs, *_ = np.linalg.lstsq(X.T, target, rcond=None)
        expected = np.linalg.norm(target - X.T @ coeffs)
        assert ks.subspace_distance(u, V) == pytest.approx(expected, rel=1e-6)


class TestGoodScale:
    def test_earliest_scale_on_integers(self, z_ball):
        x = _fn(z_ball, lambda g: g[0])
        V = GramSubspace([x], 5)
        result = ks.good_scale_search(V, range(5, 9), 0.1, R_0=20)
        assert result.radius == 5
        # det Q_R = R(R+1)(2R+1)/3
        assert result.profile[0].det_outer == pytest.approx(110)
        assert result.profile[0].det_inner == pytest.approx(60)

    def test_dimension_zero_takes_first_scale(self, z_ball):
        V = GramSubspace([], 3)
        assert ks.good_scale_search(V, [3, 4], 0.5).radius == 3

    def test_adversarial_profile(self):
        profile = [
            ScaleProfileEntry(radius=R, det_inner=1.0, det_outer=10.0, ratio=10.0) for R in range(4, 8)
        ]
        with pytest.raises(GoodScaleFailure) as info:
            ks.good_scale_from_profile(profile, dim=2, R_0=100, kappa=0.5)
        assert len(info.value.details["profile"]) == 4

    def test_scale_range_must_be_positive(self, z_ball):
        V = GramSubspace([_fn(z_ball, lambda g: g[0])], 3)
        with pytest.raises(PreconditionError):
            ks.good_scale_search(V, [1, 2], 0.5)


def test_kleiner_constant():
    assert ks.kleiner_constant(4, 1, 1, 1) == pytest.approx(4)
    assert ks.kleiner_constant(4, 100, 0.01, 10) == math.inf


def test_export_greedy_csv(z_ball):
    cands = [_fn(z_ball, lambda g, p=p: float(g[0]) ** p) for p in (1, 2)]
    _, _, result = ks.greedy_dimension(cands, 3)
    stream = io.StringIO()
    ks.export_greedy_csv(result, stream)
    lines = stream.getvalue().split("\r\n")
    assert lines[0] == "k,volume,drop_ratio"
    assert len([line for line in lines if line]) == 3
