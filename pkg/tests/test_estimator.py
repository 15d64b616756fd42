import numpy as np
import pytest

from etdest.estimator import (
    DivergenceError,
    EstimatorState,
    network_step,
    run,
    trigger_check,
)
from etdest.graph import SensorGraph
from etdest.seeding import sensor_streams
from etdest.sensing import ConstantSchedule, ObservationModel, PowerSchedule, Schedules

from oracles import always_send_run, random_setup, stacked_run


def seven_node_setup(threshold=None):
    model = ObservationModel(
        [np.array([[1.0, 0.0]]) if i % 2 == 0 else np.array([[0.0, 1.0]]) for i in range(7)],
        noise_std=0.1,
    )
    schedules = Schedules(
        step=PowerSchedule(1.0, 0.0, 0.7),
        threshold=threshold if threshold is not None else PowerSchedule(1.0, 0.0, 0.5),
    )
    initial = np.array([[0.0, -100.0], [100.0, 0.0]] * 4)[:7]
    return model, schedules, initial


class TestTriggerMechanics:
    def test_round_zero_everyone_sends(self, seven_node_graph, seven_node_theta):
        model, schedules, initial = seven_node_setup()
        trace = run(seven_node_graph, model, schedules, seven_node_theta, initial, horizon=1, seed=0)
        assert len(trace.event_times) == 7
        assert np.all(trace.event_times == 0)
        assert sorted(trace.event_sensors.tolist()) == list(range(7))
        assert np.all(trace.trigger_counts == 1)

    def test_trigger_check_strict(self):
        state = EstimatorState.initial(np.array([[1.0, 0.0]]))
        assert trigger_check(state, 0, threshold=10.0)  # forced at t=0
        state.t = 3
        assert not trigger_check(state, 0, threshold=0.0)  # zero deviation, strict
        state.estimates = np.array([[1.0, 2.0]])
        assert trigger_check(state, 0, threshold=1.9)
        assert not trigger_check(state, 0, threshold=2.0)

    def test_infinite_threshold_freezes_mailboxes(self, seven_node_graph, seven_node_theta):
        model, schedules, initial = seven_node_setup(threshold=ConstantSchedule(np.inf))
        trace = run(seven_node_graph, model, schedules, seven_node_theta, initial, horizon=50, seed=1)
        assert np.all(trace.trigger_counts == 1)
        assert np.all(trace.event_times == 0)

    def test_zero_threshold_fires_every_round(self, seven_node_graph, seven_node_theta):
        model, schedules, initial = seven_node_setup(threshold=ConstantSchedule(0.0))
        trace = run(seven_node_graph, model, schedules, seven_node_theta, initial, horizon=40, seed=2)
        assert len(trace.event_times) == 7 * 40
        assert np.all(trace.trigger_counts == 40)

    def test_deviation_never_exceeds_threshold(self, seven_node_graph, seven_node_theta):
        model, schedules, initial = seven_node_setup()
        trace = run(seven_node_graph, model, schedules, seven_node_theta, initial, horizon=300, seed=3)
        assert trace.max_trigger_slack <= 0.0

    def test_counts_match_event_log(self, seven_node_graph, seven_node_theta):
        model, schedules, initial = seven_node_setup()
        trace = run(seven_node_graph, model, schedules, seven_node_theta, initial, horizon=200, seed=4)
        assert np.array_equal(
            trace.trigger_counts, np.bincount(trace.event_sensors, minlength=7)
        )
        assert np.all(np.diff(trace.event_times) >= 0)
        assert np.array_equal(trace.trigger_counts_at(trace.horizon), trace.trigger_counts)
        assert trace.messages() == int((trace.trigger_counts * trace.child_counts).sum())


class TestDeterminism:
    def test_bitwise_repeatable(self, seven_node_graph, seven_node_theta):
        model, schedules, initial = seven_node_setup()
        a = run(seven_node_graph, model, schedules, seven_node_theta, initial, horizon=120, seed=9)
        b = run(seven_node_graph, model, schedules, seven_node_theta, initial, horizon=120, seed=9)
        assert np.array_equal(a.final_estimates, b.final_estimates)
        assert np.array_equal(a.squared_error, b.squared_error)
        assert np.array_equal(a.event_times, b.event_times)

    def test_run_index_changes_stream(self, seven_node_graph, seven_node_theta):
        model, schedules, initial = seven_node_setup()
        a = run(seven_node_graph, model, schedules, seven_node_theta, initial, horizon=60, seed=9)
        b = run(seven_node_graph, model, schedules, seven_node_theta, initial, horizon=60, seed=9, run_index=1)
        assert not np.array_equal(a.final_estimates, b.final_estimates)

    def test_run_equals_repeated_network_step(self, seven_node_graph, seven_node_theta):
        model, schedules, initial = seven_node_setup()
        horizon = 25
        trace = run(seven_node_graph, model, schedules, seven_node_theta, initial, horizon=horizon, seed=5)
        streams = sensor_streams(5, 0, 7)
        state = EstimatorState.initial(initial)
        all_events = []
        for _ in range(horizon):
            state, events = network_step(
                state, seven_node_graph, model, schedules, seven_node_theta, streams
            )
            all_events.extend(events)
        assert np.array_equal(state.estimates, trace.final_estimates)
        assert np.array_equal(state.trigger_counts, trace.trigger_counts)
        assert [(e.time, e.sensor) for e in all_events] == list(
            zip(trace.event_times.tolist(), trace.event_sensors.tolist())
        )


class TestAgainstStackedOracle:
    def test_seven_node_agreement(self, seven_node_graph, seven_node_theta):
        model, schedules, initial = seven_node_setup()
        horizon = 60
        trace = run(
            seven_node_graph, model, schedules, seven_node_theta, initial,
            horizon=horizon, seed=11, snapshot_every=10,
        )
        history, events, counts = stacked_run(
            seven_node_graph, model, schedules, seven_node_theta, initial, horizon, seed=11
        )
        assert np.allclose(history[-1], trace.final_estimates, atol=1e-9, rtol=0)
        assert np.array_equal(counts, trace.trigger_counts)
        for t, snap in trace.snapshots.items():
            assert np.allclose(history[t], snap, atol=1e-9, rtol=0)

    def test_random_sweep(self):
        master = np.random.default_rng(20240814)
        for _ in range(25):
            graph, model, schedules, theta, initial, horizon, seed, delivery = random_setup(master)
            trace = run(graph, model, schedules, theta, initial, horizon, seed=seed, delivery=delivery)
            history, events, counts = stacked_run(
                graph, model, schedules, theta, initial, horizon, seed=seed, delivery=delivery
            )
            scale = max(1.0, np.abs(history[-1]).max())
            assert np.allclose(history[-1], trace.final_estimates, atol=1e-9 * scale, rtol=0)
            assert np.array_equal(counts, trace.trigger_counts)
            assert [(t, i) for t, i in events] == list(
                zip(trace.event_times.tolist(), trace.event_sensors.tolist())
            )

    def test_zero_threshold_matches_always_send(self, seven_node_graph, seven_node_theta):
        model, schedules, initial = seven_node_setup(threshold=ConstantSchedule(0.0))
        horizon = 80
        trace = run(
            seven_node_graph, model, schedules, seven_node_theta, initial,
            horizon=horizon, seed=21, snapshot_every=1,
        )
        history = always_send_run(
            seven_node_graph, model, schedules, seven_node_theta, initial, horizon, seed=21
        )
        for t in range(horizon + 1):
            assert np.allclose(history[t], trace.snapshots.get(t, trace.final_estimates), atol=1e-9, rtol=0)


class TestScheduleClamp:
    def test_first_round_uses_time_one_gain(self):
        # single sensor, no noise, no neighbors: x(t+1) = x + a(max(t,1)) (5 - x)
        graph = SensorGraph(np.zeros((1, 1)))
        model = ObservationModel([np.array([[1.0]])], noise_std=0.0)
        schedules = Schedules(
            step=PowerSchedule(1.0, 1.0, 1.0),  # 1/(t+1)
            threshold=ConstantSchedule(np.inf),
        )
        trace = run(graph, model, schedules, [5.0], [[0.0]], horizon=4, seed=0)
        # gains used: 1/2, 1/2, 1/3, 1/4, so the remaining error is
        # 5 * (1/2 * 1/2 * 2/3 * 3/4) = 5/8
        expected = 5.0 - 5.0 * (0.5 * 0.5 * (2.0 / 3.0) * 0.75)
        assert trace.final_estimates[0, 0] == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(4.375)


class TestConvergenceSmoke:
    def test_seven_node_estimates_settle(self, seven_node_graph, seven_node_theta):
        model, schedules, initial = seven_node_setup()
        trace = run(seven_node_graph, model, schedules, seven_node_theta, initial, horizon=1000, seed=13)
        assert trace.squared_error[-1] < 1e-2 * trace.squared_error[10]
        assert np.all(np.abs(trace.final_estimates - seven_node_theta) < 0.5)

    def test_next_round_delivery_also_settles(self, seven_node_graph, seven_node_theta):
        model, schedules, initial = seven_node_setup()
        same = run(seven_node_graph, model, schedules, seven_node_theta, initial, horizon=400, seed=14)
        lagged = run(
            seven_node_graph, model, schedules, seven_node_theta, initial,
            horizon=400, seed=14, delivery="next-round",
        )
        assert not np.array_equal(same.final_estimates, lagged.final_estimates)
        assert np.all(np.abs(lagged.final_estimates - seven_node_theta) < 1.0)


class TestGuards:
    def test_divergence_raises(self):
        graph = SensorGraph(np.zeros((1, 1)))
        model = ObservationModel([np.array([[1.0]])], noise_std=0.0)
        schedules = Schedules(step=ConstantSchedule(3.0), threshold=ConstantSchedule(np.inf))
        with pytest.raises(DivergenceError) as exc:
            run(graph, model, schedules, [5.0], [[1e6]], horizon=500, seed=0)
        assert 0 < exc.value.t <= 500

    def test_shape_validation(self, seven_node_graph, seven_node_theta):
        model, schedules, initial = seven_node_setup()
        with pytest.raises(ValueError):
            run(seven_node_graph, model, schedules, seven_node_theta, initial[:5], horizon=10)
        with pytest.raises(ValueError):
            run(seven_node_graph, model, schedules, [1.0, 2.0, 3.0], initial, horizon=10)
        with pytest.raises(ValueError):
            run(seven_node_graph, model, schedules, seven_node_theta, initial, horizon=0)
        with pytest.raises(ValueError):
            run(seven_node_graph, model, schedules, seven_node_theta, initial, horizon=10, delivery="psychic")

    def test_snapshot_stride(self, seven_node_graph, seven_node_theta):
        model, schedules, initial = seven_node_setup()
        trace = run(
            seven_node_graph, model, schedules, seven_node_theta, initial,
            horizon=10, seed=1, snapshot_every=4,
        )
        assert sorted(trace.snapshots) == [0, 4, 8]
        assert np.array_equal(trace.snapshots[0], trace.initial_estimates)
