"""Monte Carlo orchestration and CSV export.

Runs are independent: run ``k`` derives its randomness from the master
seed and its own index only (see ``seeding``), so adding runs or changing
the worker count never perturbs existing results. Aggregation happens
after all runs complete, in run-index order.

CSV layouts (all values formatted with %.17g so reruns are byte-identical):

* aggregate: ``t,mse,lambda_c`` with ``lambda_c`` blank-free (nan at t=0)
* trigger log: ``t,sensor,event`` where event is the sensor's broadcast
  ordinal and sensor labels are 1-based
* estimate snapshots: ``t,sensor,x_1..x_M`` (sensor 0 rows hold the
  network-wide mean)
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import mse_series, rate_series
from .baselines import run_baseline
from .config import ExperimentConfig
from .estimator import run as run_event_triggered
from .trace import RunTrace

__all__ = [
    "RunSummary",
    "MonteCarloResult",
    "run_experiment",
    "compare_experiment",
    "write_aggregate_csv",
    "write_events_csv",
    "write_estimates_csv",
    "write_final_estimates_csv",
]


@dataclass(frozen=True)
class RunSummary:
    """Per-run scalars kept after the trace itself is discarded."""

    run_index: int
    final_squared_error: float
    messages: int
    final_rate: float


@dataclass
class MonteCarloResult:
    """Aggregate of an independent-run ensemble for one algorithm."""

    config: dict
    algorithm: str
    seed: int | None
    horizon: int
    n_sensors: int
    param_dim: int
    mse: np.ndarray
    mean_rate: np.ndarray
    run_squared_errors: np.ndarray
    run_rates: np.ndarray
    final_estimates: np.ndarray
    summaries: list[RunSummary]
    mean_snapshots: dict = field(default_factory=dict)
    traces: list[RunTrace] | None = None

    @property
    def runs(self) -> int:
        return self.run_squared_errors.shape[0]


def _execute_run(payload) -> RunTrace:
    """Run one ensemble member. Top level so worker processes can import it."""
    config_dict, algorithm, run_index, seed = payload
    config = ExperimentConfig.from_dict(config_dict)
    graph = config.build_graph()
    model = config.build_model()
    initial = config.build_initial()
    theta = np.asarray(config.theta, dtype=float)
    if algorithm["kind"] == "event-triggered":
        return run_event_triggered(
            graph,
            model,
            config.build_schedules(),
            theta,
            initial,
            config.horizon,
            seed,
            run_index=run_index,
            delivery=config.delivery,
            snapshot_every=config.snapshot_every,
        )
    return run_baseline(
        config.build_baseline(algorithm),
        graph,
        model,
        theta,
        initial,
        config.horizon,
        seed,
        run_index=run_index,
        snapshot_every=config.snapshot_every,
    )


def run_experiment(
    config: ExperimentConfig,
    *,
    algorithm: dict | None = None,
    seed: int | None = None,
    workers: int = 1,
    keep_traces: bool = False,
) -> MonteCarloResult:
    """Execute the config's ensemble and aggregate it.

    ``algorithm`` overrides the config's algorithm block (used by
    comparisons); ``seed`` overrides the master seed. Results are
    identical for any ``workers`` value.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    alg = algorithm if algorithm is not None else config.algorithm
    master_seed = config.seed if seed is None else seed

    # Build once up front so bad configs fail before any worker spawns.
    graph = config.build_graph()
    model = config.build_model()
    config.build_initial()
    if alg["kind"] == "event-triggered":
        config.build_schedules()
    else:
        config.build_baseline(alg)

    config_dict = config.to_dict()
    payloads = [(config_dict, alg, k, master_seed) for k in range(config.runs)]
    if workers == 1 or config.runs == 1:
        traces = [_execute_run(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(_execute_run, payloads))

    sq = np.stack([t.squared_error for t in traces])
    rates = np.stack([rate_series(t) for t in traces])
    finals = np.stack([t.final_estimates for t in traces])
    summaries = [
        RunSummary(
            run_index=k,
            final_squared_error=float(t.squared_error[-1]),
            messages=t.messages(),
            final_rate=float(rates[k, -1]),
        )
        for k, t in enumerate(traces)
    ]
    snapshot_ts = sorted(traces[0].snapshots) if traces[0].snapshots else []
    mean_snapshots = {
        t: np.mean([tr.snapshots[t] for tr in traces], axis=0) for t in snapshot_ts
    }
    # rate is undefined at t=0, so the mean keeps nan there instead of warning
    mean_rate = np.empty(config.horizon + 1)
    mean_rate[0] = np.nan
    mean_rate[1:] = rates[:, 1:].mean(axis=0)

    echoed = dict(config_dict)
    echoed["algorithm"] = alg
    echoed["seed"] = master_seed
    return MonteCarloResult(
        config=echoed,
        algorithm=config.algorithm_label(alg),
        seed=master_seed,
        horizon=config.horizon,
        n_sensors=graph.n,
        param_dim=model.param_dim,
        mse=mse_series(traces),
        mean_rate=mean_rate,
        run_squared_errors=sq,
        run_rates=rates,
        final_estimates=finals,
        summaries=summaries,
        mean_snapshots=mean_snapshots,
        traces=list(traces) if keep_traces else None,
    )


def compare_experiment(
    config: ExperimentConfig,
    *,
    seed: int | None = None,
    workers: int = 1,
) -> list[MonteCarloResult]:
    """Run the main algorithm plus every configured baseline block."""
    blocks = [config.algorithm] + list(config.baselines)
    return [
        run_experiment(config, algorithm=block, seed=seed, workers=workers)
        for block in blocks
    ]


# ----- CSV export ----------------------------------------------------------


def _fmt(value) -> str:
    return format(float(value), ".17g")


def write_aggregate_csv(result: MonteCarloResult, path) -> Path:
    """Per-round ensemble aggregates: ``t,mse,lambda_c``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "mse", "lambda_c"])
        for t in range(result.horizon + 1):
            writer.writerow([t, _fmt(result.mse[t]), _fmt(result.mean_rate[t])])
    return path


def write_events_csv(trace: RunTrace, path) -> Path:
    """Trigger log of one run: ``t,sensor,event`` (sensor labels 1-based)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ordinal = np.zeros(trace.n, dtype=np.int64)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "sensor", "event"])
        for t, i in zip(trace.event_times, trace.event_sensors):
            ordinal[i] += 1
            writer.writerow([int(t), int(i) + 1, int(ordinal[i])])
    return path


def write_estimates_csv(trace: RunTrace, path) -> Path:
    """Snapshot estimates of one run: ``t,sensor,x_1..x_M``.

    Sensor 0 rows carry the across-network mean at that snapshot.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dim = trace.param_dim
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "sensor"] + [f"x_{k + 1}" for k in range(dim)])
        for t in sorted(trace.snapshots):
            states = trace.snapshots[t]
            writer.writerow([t, 0] + [_fmt(v) for v in states.mean(axis=0)])
            for i in range(trace.n):
                writer.writerow([t, i + 1] + [_fmt(v) for v in states[i]])
    return path


def write_final_estimates_csv(result: MonteCarloResult, path) -> Path:
    """Run-averaged final estimates per sensor plus the grand mean (sensor 0)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    means = result.final_estimates.mean(axis=0)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sensor"] + [f"x_{k + 1}" for k in range(result.param_dim)])
        writer.writerow([0] + [_fmt(v) for v in means.mean(axis=0)])
        for i in range(result.n_sensors):
            writer.writerow([i + 1] + [_fmt(v) for v in means[i]])
    return path
