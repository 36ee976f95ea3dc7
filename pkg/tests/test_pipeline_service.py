import itertools
import logging
import math

import pytest

from fgromov.models import catalog
from fgromov.models.enums import DichotomyBranch, StepKind, TerminalState
from fgromov.services import pipeline_service as pipeline
from fgromov.services.ball_cache import BallCache
from fgromov.services.subgroup_service import build_certificate, generator_reduction
from fgromov.utils.errors import PreconditionError, ValidationError


class TestGrowthReport:
    def test_z2_table_and_degree(self, z2):
        report = pipeline.growth_report(z2, 40)
        assert len(report.rows) == 41
        assert report.rows[2].size == 13
        assert report.rows[40].size == 2 * 40 * 40 + 2 * 40 + 1
        assert report.rows[40].sphere == 160
        assert report.stabilization_radius is None
        assert [(e.r1, e.r2) for e in report.estimates] == [(10, 20), (20, 40)]
        assert report.estimates[-1].slope == pytest.approx(2, abs=0.05)

    def test_cyclic_stabilization_row(self):
        report = pipeline.growth_report(catalog.cyclic(101), 60)
        assert report.stabilization_radius == 50
        assert report.rows[50].size == 101
        assert report.rows[50].stabilized and report.rows[60].stabilized
        assert not report.rows[49].stabilized
        assert not report.exponential

    def test_lamplighter_is_exponential(self, lamplighter):
        report = pipeline.growth_report(lamplighter, 12)
        assert report.exponential
        assert report.estimates[-1].exponential

    def test_cache_is_used_on_second_run(self, tmp_path, heisenberg):
        cache = BallCache(tmp_path)
        first = pipeline.growth_report(heisenberg, 5, cache)
        second = pipeline.growth_report(heisenberg, 5, cache)
        assert not first.cached
        assert second.cached
        assert first.rows == second.rows

    def test_rejects_zero_radius(self, z2):
        with pytest.raises(ValidationError):
            pipeline.growth_report(z2, 0)

    def test_no_cache(self):
        assert pipeline.open_cache(use_cache=False) is None


class TestReduce:
    def test_z2_reaches_trivial_commutator_subgroup(self, z2):
        trace = pipeline.reduce_group(z2)
        assert trace.terminal == TerminalState.TRIVIAL.value
        assert trace.terminal_size == 1
        assert [s.kind for s in trace.steps] == [StepKind.FINITE_INDEX.value, StepKind.CYCLIC_KERNEL.value]
        step1, step2 = trace.steps
        assert step1.certificate.checked_inclusion
        assert step1.index_bound == 1
        assert step2.d_after == 0.0
        assert step2.commutators.inclusion_verified
        assert trace.total_index_bound == 1
        assert trace.step_count == 2

    def test_small_cyclic_group_is_finite_at_once(self):
        trace = pipeline.reduce_group(catalog.cyclic(5))
        assert trace.terminal == TerminalState.FINITE.value
        assert trace.terminal_size == 5
        assert trace.steps == []

    def test_large_cyclic_group_ends_after_one_kernel_step(self):
        trace = pipeline.reduce_group(catalog.cyclic(101))
        assert trace.terminal == TerminalState.TRIVIAL.value
        assert trace.steps[-1].kind == StepKind.CYCLIC_KERNEL.value
        assert sum(s.kind == StepKind.CYCLIC_KERNEL.value for s in trace.steps) == 1

    def test_zero_budget(self, z2):
        trace = pipeline.reduce_group(z2, budget=0)
        assert trace.terminal == TerminalState.BUDGET.value
        assert trace.steps == []

    def test_wall_clock(self, z2):
        clock = itertools.count(0, 10_000).__next__
        trace = pipeline.reduce_group(z2, clock=clock)
        assert trace.terminal == TerminalState.BUDGET.value

    def test_negative_budget(self, z2):
        with pytest.raises(ValidationError):
            pipeline.reduce_group(z2, budget=-1)

    def test_failed_certificate_ends_the_trace(self, z1, monkeypatch):
        unverified = build_certificate(z1, [(5,), (-5,)], K=1, R=5)

        def failing_reduction(group, R_0, kappa, d=None):
            S_prime, r, result = generator_reduction(group, R_0, kappa, d)
            return S_prime, r, result.model_copy(update={"certificate": unverified})

        monkeypatch.setattr(pipeline, "generator_reduction", failing_reduction)
        trace = pipeline.reduce_group(z1)
        assert trace.terminal == TerminalState.UNCERTIFIED.value
        assert trace.steps == []
        assert trace.rejected_certificate == unverified

    @pytest.mark.slow
    def test_heisenberg_passes_through_the_center(self, heisenberg):
        trace = pipeline.reduce_group(heisenberg)
        assert trace.terminal == TerminalState.TRIVIAL.value
        first_kernel = trace.steps[1]
        assert first_kernel.kind == StepKind.CYCLIC_KERNEL.value
        assert first_kernel.d_before > 3
        assert first_kernel.d_after < 1.5
        center = catalog.heisenberg_center_generator()
        assert list(center) in first_kernel.subgroup_generators
        assert trace.steps[3].d_after == 0.0


class TestCertify:
    def test_heisenberg_two_step(self, heisenberg):
        cert = pipeline.certify_nilpotent(heisenberg, 2, 4, 4)
        assert cert.certified
        assert cert.subgroup.checked_inclusion
        assert cert.nilpotency.nilpotent

    def test_heisenberg_is_not_abelian(self, heisenberg):
        cert = pipeline.certify_nilpotent(heisenberg, 1, 4, 4)
        assert not cert.certified
        assert cert.nilpotency.witness is not None

    def test_z_one_step(self, z1):
        assert pipeline.certify_nilpotent(z1, 1, 2, 2).certified

    def test_free_group_fails(self, free2):
        cert = pipeline.certify_nilpotent(free2, 2, 2, 2)
        assert not cert.certified
        assert cert.nilpotency.witness is not None

    def test_kernel_subgroup(self, z1):
        cert = pipeline.certify_nilpotent(z1, 1, 4, 4, kernel=(0, 2))
        assert cert.certified
        assert cert.subgroup.index == 2
        assert cert.finite_index.coset_counts[:3] == [1, 2, 2]
        assert sorted(cert.subgroup.generators) == [[-2], [0], [2]]

    def test_kernel_coordinate_is_checked(self, z1):
        with pytest.raises(ValidationError):
            pipeline.coordinate_kernel(z1, 3, 2)


class TestDichotomyAndSlowGrowth:
    def test_cat_report(self):
        report = pipeline.dichotomy_report(catalog.CAT_MAP)
        assert report.result.branch == DichotomyBranch.GROWTH.value
        assert report.result.mahler == pytest.approx((3 + math.sqrt(5)) / 2, abs=1e-6)
        assert not report.tower.polynomial

    def test_rotation_report(self):
        report = pipeline.dichotomy_report(catalog.ROTATION, tower=False)
        assert report.result.period == 4
        assert report.tower is None

    def test_shear_assembles_two_step_subgroup(self):
        report = pipeline.slow_growth_report(catalog.semidirect(catalog.SHEAR), R_candidates=(1,), spread=3)
        assert report.certificate.verified
        assert report.tower.P == 1
        assert report.assembly.nilpotent
        assert report.assembly.step == 2

    def test_needs_a_semidirect_product(self, z2):
        with pytest.raises(PreconditionError):
            pipeline.slow_growth_report(z2)


class TestMilnorCheck:
    def test_flat_case_holds(self):
        check = pipeline.milnor_bound_check(3, 0, 1, 1, 100)
        assert check.lhs == pytest.approx(4)
        assert check.holds
        assert check.ball_bound == pytest.approx(400 ** 3)

    def test_curved_case_fails(self):
        check = pipeline.milnor_bound_check(3, 1, 1, 0.1, 10)
        assert check.log_lhs == pytest.approx(math.log(40) + 20 * math.pi)
        assert not check.holds

    def test_overflow_is_infinite(self):
        check = pipeline.milnor_bound_check(2, 1, 1, 1, 1e6)
        assert check.lhs == math.inf
        assert check.ball_bound == math.inf
        assert not check.holds

    def test_hypothesis_warning(self, caplog):
        with caplog.at_level(logging.WARNING):
            check = pipeline.milnor_bound_check(1, 0, 1, 1, 100, C=1)
        assert check.hypothesis_holds is False
        assert "exp(exp(C(2n)^C))" in caplog.text
        assert pipeline.milnor_bound_check(1, 0, 1, 1, 1e4, C=1).hypothesis_holds

    def test_rejects_bad_input(self):
        with pytest.raises(ValidationError):
            pipeline.milnor_bound_check(0, 0, 1, 1, 10)
        with pytest.raises(ValidationError):
            pipeline.milnor_bound_check(2, 0, 1, 0, 10)


def test_kleiner_dimension_of_z2(z2):
    _, result = pipeline.kleiner_dimension(z2, 4, 6, seed=3)
    assert result.dim == 2


def test_harmonic_report():
    u, report = pipeline.harmonic_report(catalog.cyclic(64), 8)
    assert report.group == "Z/64"
    assert report.sup_norm == pytest.approx(u.sup_norm())
    assert report.sup_norm > 0
