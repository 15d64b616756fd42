import numpy as np
import pytest

from etdest.baselines import (
    BASELINE_KINDS,
    BaselineConfig,
    BaselineError,
    BaselineState,
    baseline_step,
    run_baseline,
)
from etdest.estimator import run
from etdest.graph import SensorGraph
from etdest.seeding import sensor_streams
from etdest.sensing import ConstantSchedule, ObservationModel, PowerSchedule, Schedules


def two_node_setup(noise=0.0):
    graph = SensorGraph.from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)])
    model = ObservationModel([np.array([[1.0]]), np.array([[1.0]])], noise_std=noise)
    return graph, model


def seven_node_model():
    return ObservationModel(
        [np.array([[1.0, 0.0]]) if i % 2 == 0 else np.array([[0.0, 1.0]]) for i in range(7)],
        noise_std=0.1,
    )


class TestValidation:
    def test_unknown_kind(self):
        with pytest.raises(BaselineError):
            BaselineConfig(kind="gradient-push", step=ConstantSchedule(0.1))

    def test_period_positive(self):
        with pytest.raises(BaselineError):
            BaselineConfig(kind="diffusion-lms", period=0, step=ConstantSchedule(0.1))

    def test_step_required(self):
        with pytest.raises(BaselineError):
            BaselineConfig(kind="diffusion-lms")

    def test_consensus_step_only_for_consensus_innovations(self):
        with pytest.raises(BaselineError):
            BaselineConfig(
                kind="periodic-single-gain",
                step=ConstantSchedule(0.1),
                consensus_step=ConstantSchedule(0.1),
            )
        with pytest.raises(BaselineError):
            BaselineConfig(kind="periodic-consensus-innovations", step=ConstantSchedule(0.1))

    def test_gain_matrix_shape(self):
        graph, model = two_node_setup()
        config = BaselineConfig(
            kind="periodic-consensus-innovations",
            step=ConstantSchedule(0.1),
            consensus_step=ConstantSchedule(0.1),
            gain_matrix=np.eye(3),
        )
        with pytest.raises(BaselineError):
            run_baseline(config, graph, model, [1.0], [[0.0], [0.0]], horizon=2, seed=0)

    def test_singular_information_warns(self):
        graph = SensorGraph.from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)])
        model = ObservationModel([np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]])], noise_std=0.0)
        config = BaselineConfig(
            kind="periodic-consensus-innovations",
            step=ConstantSchedule(0.1),
            consensus_step=ConstantSchedule(0.1),
        )
        with pytest.warns(UserWarning):
            run_baseline(config, graph, model, [1.0, 2.0], np.zeros((2, 2)), horizon=2, seed=0)


class TestMessageBudget:
    @pytest.mark.parametrize("period,horizon", [(1, 10), (3, 10), (11, 100), (7, 7)])
    def test_send_counts(self, seven_node_graph, seven_node_theta, period, horizon):
        config = BaselineConfig(
            kind="periodic-single-gain",
            period=period,
            step=PowerSchedule(1.0, 0.0, 0.7),
        )
        trace = run_baseline(
            config, seven_node_graph, seven_node_model(), seven_node_theta,
            np.zeros((7, 2)), horizon=horizon, seed=0,
        )
        expected_rounds = -(-horizon // period)  # ceil
        assert np.all(trace.trigger_counts == expected_rounds)
        assert trace.messages() == expected_rounds * int(trace.child_counts.sum())

    def test_rate_near_inverse_period(self, seven_node_graph, seven_node_theta):
        from etdest.analysis import communication_rate

        config = BaselineConfig(
            kind="periodic-single-gain", period=11, step=PowerSchedule(1.0, 0.0, 0.7)
        )
        trace = run_baseline(
            config, seven_node_graph, seven_node_model(), seven_node_theta,
            np.zeros((7, 2)), horizon=1100, seed=0,
        )
        assert communication_rate(trace, 1100) == pytest.approx(1 / 11)


class TestHandComputedRounds:
    def test_diffusion_adapt_then_combine(self):
        graph, model = two_node_setup()
        config = BaselineConfig(kind="diffusion-lms", period=1, step=ConstantSchedule(0.5))
        trace = run_baseline(config, graph, model, [2.0], [[0.0], [4.0]], horizon=1, seed=0)
        assert np.allclose(trace.final_estimates, [[2.0], [2.0]], atol=1e-12)

    def test_diffusion_staleness(self):
        graph, model = two_node_setup()
        config = BaselineConfig(kind="diffusion-lms", period=2, step=ConstantSchedule(0.5))
        trace = run_baseline(config, graph, model, [2.0], [[0.0], [4.0]], horizon=2, seed=0)
        # round 0 shares the intermediates (1, 3); round 1 adapts but
        # combines against the stale shares
        assert np.allclose(trace.final_estimates, [[2.5], [1.5]], atol=1e-12)

    def test_consensus_innovations_round(self):
        graph, model = two_node_setup()
        config = BaselineConfig(
            kind="periodic-consensus-innovations",
            period=1,
            step=ConstantSchedule(0.4),
            consensus_step=ConstantSchedule(0.1),
        )
        trace = run_baseline(config, graph, model, [2.0], [[0.0], [4.0]], horizon=1, seed=0)
        assert np.allclose(trace.final_estimates, [[0.8], [3.2]], atol=1e-12)


class TestEquivalences:
    def test_period_one_single_gain_matches_zero_threshold_estimator(
        self, seven_node_graph, seven_node_theta
    ):
        gain = PowerSchedule(1.0, 0.0, 0.7)
        initial = np.array([[0.0, -100.0], [100.0, 0.0]] * 4)[:7]
        model = seven_node_model()
        config = BaselineConfig(kind="periodic-single-gain", period=1, step=gain)
        base = run_baseline(
            config, seven_node_graph, model, seven_node_theta, initial, horizon=100, seed=31
        )
        schedules = Schedules(step=gain, threshold=ConstantSchedule(0.0))
        triggered = run(
            seven_node_graph, model, schedules, seven_node_theta, initial, horizon=100, seed=31
        )
        assert np.allclose(base.final_estimates, triggered.final_estimates, atol=1e-9, rtol=0)
        assert np.allclose(base.squared_error, triggered.squared_error, atol=1e-9, rtol=0)
        assert np.array_equal(base.trigger_counts, triggered.trigger_counts)

    def test_step_function_matches_run(self, seven_node_graph, seven_node_theta):
        model = seven_node_model()
        config = BaselineConfig(
            kind="periodic-consensus-innovations",
            period=3,
            step=PowerSchedule(2.0, 1.0, 0.7),
            consensus_step=PowerSchedule(0.5, 1.0, 0.7),
        )
        initial = np.zeros((7, 2))
        horizon = 20
        trace = run_baseline(
            config, seven_node_graph, model, seven_node_theta, initial, horizon=horizon, seed=17
        )
        state = BaselineState.initial(initial)
        streams = sensor_streams(17, 0, 7)
        events = []
        for _ in range(horizon):
            state, evs = baseline_step(config, state, seven_node_graph, model, seven_node_theta, streams)
            events.extend(evs)
        assert np.array_equal(state.estimates, trace.final_estimates)
        assert np.array_equal(state.send_counts, trace.trigger_counts)
        assert [(e.time, e.sensor) for e in events] == list(
            zip(trace.event_times.tolist(), trace.event_sensors.tolist())
        )

    def test_shared_values_frozen_between_broadcasts(self, seven_node_graph, seven_node_theta):
        model = seven_node_model()
        config = BaselineConfig(kind="periodic-single-gain", period=5, step=PowerSchedule(1.0, 0.0, 0.7))
        state = BaselineState.initial(np.zeros((7, 2)))
        streams = sensor_streams(3, 0, 7)
        snapshots = []
        for _ in range(10):
            state, _ = baseline_step(config, state, seven_node_graph, model, seven_node_theta, streams)
            snapshots.append(state.shared.copy())
        for t in (1, 2, 3, 4):  # no broadcast until t=5
            assert np.array_equal(snapshots[t], snapshots[0])
        assert not np.array_equal(snapshots[5], snapshots[0])


class TestConvergenceSmoke:
    @pytest.mark.parametrize("kind", BASELINE_KINDS)
    def test_settles_near_parameter(self, seven_node_graph, seven_node_theta, kind):
        model = seven_node_model()
        if kind == "periodic-consensus-innovations":
            config = BaselineConfig(
                kind=kind,
                period=5,
                step=PowerSchedule(2.0, 1.0, 0.7),
                consensus_step=PowerSchedule(0.3, 1.0, 0.7),
            )
        else:
            config = BaselineConfig(kind=kind, period=5, step=PowerSchedule(0.8, 1.0, 0.7))
        trace = run_baseline(
            config, seven_node_graph, model, seven_node_theta,
            np.zeros((7, 2)), horizon=2000, seed=23,
        )
        assert np.all(np.abs(trace.final_estimates - seven_node_theta) < 0.6)
        assert trace.squared_error[-1] < trace.squared_error[0]
