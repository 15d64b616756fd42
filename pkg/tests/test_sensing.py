import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etdest.sensing import (
    ConditionReport,
    ConstantSchedule,
    ModelError,
    ObservationModel,
    PowerSchedule,
    ScheduleError,
    Schedules,
    as_parameter,
    check_assumption1,
    check_assumption2,
    gap_condition,
    power_schedule,
)


class TestSchedules:
    def test_power_values(self):
        s = power_schedule(2.0, offset=1.0, exponent=0.5)
        assert s(0) == 2.0
        assert s(3) == pytest.approx(1.0)
        out = s(np.array([0.0, 3.0]))
        assert np.allclose(out, [2.0, 1.0])

    def test_power_domain_error(self):
        s = power_schedule(1.0, offset=0.0, exponent=0.7)
        with pytest.raises(ScheduleError):
            s(0)
        with pytest.raises(ScheduleError):
            s(-2)

    def test_power_validation(self):
        with pytest.raises(ScheduleError):
            PowerSchedule(scale=-1.0)
        with pytest.raises(ScheduleError):
            PowerSchedule(scale=1.0, offset=np.inf)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.01, 10.0), st.floats(0.0, 5.0), st.floats(0.01, 2.0))
    def test_power_strictly_decreasing(self, scale, offset, exponent):
        s = PowerSchedule(scale, offset, exponent)
        ts = np.arange(1, 50, dtype=float)
        vals = s(ts)
        assert np.all(np.diff(vals) < 0)

    def test_constant_allows_inf(self):
        s = ConstantSchedule(np.inf)
        assert s(5) == np.inf
        with pytest.raises(ScheduleError):
            ConstantSchedule(-1.0)

    def test_per_sensor_vectors(self):
        s = Schedules(
            step=[ConstantSchedule(0.1), ConstantSchedule(0.2)],
            threshold=ConstantSchedule(1.0),
        )
        assert np.allclose(s.step_vector(3, 2), [0.1, 0.2])
        assert np.allclose(s.threshold_vector(3, 2), [1.0, 1.0])
        assert s.step_at(1, 3) == 0.2
        assert s.f_max(3, 2) == 1.0 == s.f_min(3, 2)
        with pytest.raises(ScheduleError):
            s.step_vector(3, 4)

    def test_reference_defaults_to_first_step(self):
        a = PowerSchedule(1.0, 0.0, 0.7)
        s = Schedules(step=[a, a], threshold=ConstantSchedule(0.0))
        assert s.reference(4) == a(4)

    def test_declared_exponent_validation(self):
        with pytest.raises(ScheduleError):
            Schedules(step=ConstantSchedule(0.1), threshold=ConstantSchedule(0.0), delta=0.5)
        with pytest.raises(ScheduleError):
            Schedules(step=ConstantSchedule(0.1), threshold=ConstantSchedule(0.0), rho=2.0)

    def test_trigger_scale_default(self):
        a = PowerSchedule(1.0, 0.0, 0.7)
        s = Schedules(step=a, threshold=ConstantSchedule(0.0), delta=0.2, rho=4.0)
        # exponent 0.7 * (1 - 2*(1-0.2)/4) = 0.7 * 0.6
        assert s.scale(10) == pytest.approx(10 ** (-0.42))
        bare = Schedules(step=a, threshold=ConstantSchedule(0.0))
        with pytest.raises(ScheduleError):
            bare.scale(10)


class TestObservationModel:
    def test_static_shapes(self):
        model = ObservationModel([np.array([[1.0, 0.0]]), np.array([[0.0, 1.0], [1.0, 1.0]])])
        assert model.n == 2
        assert model.param_dim == 2
        assert model.dims == (1, 2)
        assert model.m_max == 2
        assert model.static

    def test_measure_noise_free(self):
        model = ObservationModel([np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])], noise_std=0.0)
        rng = np.random.default_rng(0)
        y = model.measure([3.0, -2.0], 0, 0, rng)
        assert np.allclose(y, [3.0], rtol=1e-12)
        assert np.allclose(model.measure([3.0, -2.0], 1, 5, rng), [-2.0], rtol=1e-12)

    def test_gram(self):
        h = np.array([[1.0, 2.0], [0.0, 1.0]])
        model = ObservationModel([h])
        assert np.allclose(model.gram(0, 0), h.T @ h)

    def test_matrix_fn_path(self):
        model = ObservationModel(
            matrix_fn=lambda i, t: np.array([[1.0 + t, 0.0]]),
            n_sensors=1,
            dims=[1],
            param_dim=2,
            noise_std=0.0,
        )
        assert not model.static
        assert np.allclose(model.matrix(0, 3), [[4.0, 0.0]])

    def test_matrix_fn_shape_error(self):
        model = ObservationModel(
            matrix_fn=lambda i, t: np.zeros((2, 2)),
            n_sensors=1,
            dims=[1],
            param_dim=2,
        )
        with pytest.raises(ModelError):
            model.matrix(0, 0)

    def test_custom_noise_fn(self):
        model = ObservationModel(
            [np.eye(2)],
            noise_fn=lambda i, t, rng: np.full(2, float(t)),
        )
        rng = np.random.default_rng(0)
        block = model.noise_block(0, 3, 2, rng)
        assert np.allclose(block, [[3.0, 3.0], [4.0, 4.0]])

    def test_validation_errors(self):
        with pytest.raises(ModelError):
            ObservationModel()
        with pytest.raises(ModelError):
            ObservationModel([np.array([[1.0]]), np.array([[1.0, 2.0]])])
        with pytest.raises(ModelError):
            ObservationModel([np.array([[1.0]])], noise_std=-0.5)
        with pytest.raises(ModelError):
            ObservationModel([np.array([[np.nan]])])
        model = ObservationModel([np.array([[1.0]])])
        with pytest.raises(ModelError):
            model.matrix(1, 0)
        with pytest.raises(ModelError):
            model.measure([1.0, 2.0], 0, 0, np.random.default_rng(0))

    def test_noise_chunking_invariant(self):
        model = ObservationModel([np.array([[1.0, 0.0], [0.0, 1.0]])], noise_std=0.7)
        whole = model.noise_block(0, 0, 10, np.random.default_rng(42))
        rng = np.random.default_rng(42)
        parts = np.vstack([model.noise_block(0, 0, 4, rng), model.noise_block(0, 4, 6, rng)])
        assert np.array_equal(whole, parts)
        rng = np.random.default_rng(42)
        singles = np.vstack([model.noise_block(0, t, 1, rng) for t in range(10)])
        assert np.array_equal(whole, singles)

    def test_measurement_statistics(self):
        # mean of many draws should land on H theta well within 5 sigma
        model = ObservationModel([np.array([[0.0, 1.0]])], noise_std=0.1)
        rng = np.random.default_rng(7)
        draws = model.noise_block(0, 0, 10_000, rng)[:, 0] + 2.0
        assert abs(draws.mean() - 2.0) < 5 * 0.1 / np.sqrt(10_000)

    def test_noise_serially_uncorrelated(self):
        model = ObservationModel([np.array([[1.0]])], noise_std=1.0)
        x = model.noise_block(0, 0, 100_000, np.random.default_rng(3))[:, 0]
        lag1 = np.mean(x[:-1] * x[1:])
        assert abs(lag1) < 5 / np.sqrt(100_000)


class TestAsParameter:
    def test_roundtrip(self):
        assert np.array_equal(as_parameter([1.0, 2.0], 2), [1.0, 2.0])

    def test_errors(self):
        with pytest.raises(ModelError):
            as_parameter([[1.0]])
        with pytest.raises(ModelError):
            as_parameter([np.inf])
        with pytest.raises(ModelError):
            as_parameter([1.0], dim=2)


def _family(step_exp, thr_exp, delta=0.2, rho=4.0, **kw):
    return Schedules(
        step=PowerSchedule(1.0, 0.0, step_exp),
        threshold=PowerSchedule(1.0, 0.0, thr_exp),
        delta=delta,
        rho=rho,
        **kw,
    )


class TestCheckStepConditions:
    def test_reference_family_passes(self):
        report = check_assumption1(_family(0.7, 0.5), horizon=5_000)
        assert report.passed is True
        for name, check in report.conditions.items():
            assert check.verdict == "pass", name

    def test_slow_threshold_fails(self):
        report = check_assumption1(_family(0.7, 0.1), horizon=5_000)
        assert report.passed is False
        assert report.conditions["threshold_ratio_vanishes"].verdict == "fail"
        assert report.conditions["threshold_mixed_sum_converges"].verdict == "fail"

    def test_constant_step_fails_to_vanish(self):
        s = Schedules(step=ConstantSchedule(0.1), threshold=PowerSchedule(1.0, 0.0, 0.5))
        report = check_assumption1(s, horizon=5_000)
        assert report.conditions["step_vanishes"].verdict == "fail"
        assert report.passed is False

    def test_too_fast_step_fails_divergence(self):
        report = check_assumption1(_family(1.2, 0.5), horizon=5_000)
        assert report.conditions["step_sum_diverges"].verdict == "fail"
        assert report.conditions["inverse_gap_limit"].verdict == "fail"

    def test_mismatched_sensors_fail_reference(self):
        s = Schedules(
            step=[PowerSchedule(1.0, 0.0, 0.7), PowerSchedule(1.0, 0.0, 0.8)],
            threshold=ConstantSchedule(0.0),
            delta=0.2,
        )
        report = check_assumption1(s, horizon=5_000)
        assert report.conditions["step_matches_reference"].verdict == "fail"

    def test_offsets_do_not_fail_reference(self):
        s = Schedules(
            step=[PowerSchedule(1.0, 0.0, 0.7), PowerSchedule(1.0, 50.0, 0.7)],
            threshold=PowerSchedule(1.0, 0.0, 0.5),
            delta=0.2,
        )
        report = check_assumption1(s, horizon=5_000)
        assert report.conditions["step_matches_reference"].verdict == "pass"

    def test_custom_schedule_numeric_only(self):
        s = Schedules(step=lambda t: 1.0 / (1.0 + np.log1p(t)), threshold=ConstantSchedule(0.0))
        report = check_assumption1(s, horizon=5_000)
        assert report.passed is None
        assert report.conditions["step_vanishes"].verdict == "numeric-only"

    def test_zero_thresholds_pass_trigger_conditions(self):
        s = Schedules(step=PowerSchedule(1.0, 0.0, 0.7), threshold=ConstantSchedule(0.0), delta=0.2)
        report = check_assumption1(s, horizon=5_000)
        assert report.conditions["threshold_ratio_vanishes"].verdict == "pass"
        assert report.conditions["threshold_mixed_sum_converges"].verdict == "pass"

    def test_unit_step_family_moment_window(self):
        # steps 1/t: the admissible threshold exponent window is pinned by
        # the noise moment order; the boundary itself must fail
        good = check_assumption1(_family(1.0, 0.3, delta=0.05, rho=16.0), horizon=5_000)
        assert good.conditions["threshold_mixed_sum_converges"].verdict == "pass"
        boundary = 0.5 - 2.0 * (1.0 - 0.05) / 16.0
        bad = check_assumption1(_family(1.0, boundary, delta=0.05, rho=16.0), horizon=5_000)
        assert bad.conditions["threshold_mixed_sum_converges"].verdict == "fail"

    def test_report_lines_render(self):
        report = check_assumption1(_family(0.7, 0.5), horizon=5_000)
        lines = report.lines()
        assert len(lines) == len(report.conditions)
        assert all(":" in line for line in lines)


class TestCheckTriggerConditions:
    def test_gap_powerlaw_passes(self):
        assert gap_condition(lambda t: np.asarray(t) ** 0.75, horizon=10_000).verdict == "pass"

    def test_gap_constant_fails(self):
        assert gap_condition(lambda t: 5.0 + 0.0 * np.asarray(t), horizon=10_000).verdict == "fail"

    def test_designed_scale_passes(self):
        s = _family(0.7, 0.5, trigger_scale=PowerSchedule(1.0, 0.0, 1.1))
        report = check_assumption2(s, horizon=10_000)
        assert report.passed is True

    def test_default_scale_flags_shrinking_gap(self):
        s = _family(0.7, 0.5)
        report = check_assumption2(s, horizon=10_000)
        assert report.conditions["gap_function"].verdict == "fail"
        assert report.passed is False

    def test_growing_floor_fails(self):
        s = _family(0.7, 0.5, threshold_floor=lambda t: np.log1p(np.asarray(t)))
        report = check_assumption2(s, horizon=10_000)
        assert report.conditions["floor_non_increasing"].verdict == "fail"
        assert report.conditions["floor_below_thresholds"].verdict == "fail"
