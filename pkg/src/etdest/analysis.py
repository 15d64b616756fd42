"""Post-run diagnostics: communication rates, ensemble error, spectra.

Includes the weighted communication-rate statistic, ensemble MSE,
windowed gramian screening of the graph/sensing pair, log-log decay-rate
fitting, and a small simulator for perturbed linear error recursions
used to sanity-check step-size designs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import SensorGraph
from .sensing import ObservationModel, Schedule
from .trace import RunTrace

__all__ = [
    "AnalysisError",
    "RateFit",
    "GramianReport",
    "communication_rate",
    "rate_series",
    "mse",
    "mse_series",
    "fit_decay",
    "gramian_check",
    "linear_recursion_sim",
]


class AnalysisError(ValueError):
    """Undefined statistic (bad window, empty ensemble, missing edges)."""


# ----- communication rate ----------------------------------------------


def communication_rate(trace: RunTrace, t: int) -> float:
    """Fraction of possible messages actually sent through round ``t``.

    Broadcast counts are weighted by each sensor's audience size and
    normalized by the ``t`` rounds elapsed; since round 0 is a forced
    broadcast the raw ratio can exceed one early on and is clamped.
    """
    if not 1 <= t <= trace.horizon:
        raise AnalysisError(f"rate undefined at t={t}, need 1 <= t <= {trace.horizon}")
    audience = trace.child_counts.sum()
    if audience == 0:
        raise AnalysisError("rate undefined on a graph with no edges")
    sent = float((trace.trigger_counts_at(t) * trace.child_counts).sum())
    return min(sent / (t * audience), 1.0)


def rate_series(trace: RunTrace) -> np.ndarray:
    """Communication rate at every round, index-aligned with t; nan at t=0."""
    audience = trace.child_counts.sum()
    if audience == 0:
        raise AnalysisError("rate undefined on a graph with no edges")
    weights = trace.child_counts[trace.event_sensors].astype(float)
    per_round = np.bincount(trace.event_times, weights=weights, minlength=trace.horizon + 1)
    sent = np.cumsum(per_round)
    out = np.empty(trace.horizon + 1)
    out[0] = np.nan
    ts = np.arange(1, trace.horizon + 1, dtype=float)
    out[1:] = np.minimum(sent[1:] / (ts * audience), 1.0)
    return out


# ----- ensemble error ---------------------------------------------------


def _check_ensemble(traces: Sequence[RunTrace]) -> None:
    if not traces:
        raise AnalysisError("need at least one trace")
    first = traces[0]
    for k, tr in enumerate(traces):
        if tr.horizon != first.horizon or tr.n != first.n:
            raise AnalysisError(f"trace {k} has mismatched shape (horizon or sensor count)")
        if not np.allclose(tr.theta, first.theta):
            raise AnalysisError(f"trace {k} was generated from a different parameter")


def mse(traces: Sequence[RunTrace], t: int) -> float:
    """Per-sensor mean squared estimation error at round ``t`` across runs."""
    _check_ensemble(traces)
    if not 0 <= t <= traces[0].horizon:
        raise AnalysisError(f"t={t} outside [0, {traces[0].horizon}]")
    return float(np.mean([tr.squared_error[t] for tr in traces]) / traces[0].n)


def mse_series(traces: Sequence[RunTrace]) -> np.ndarray:
    """Per-sensor mean squared error at every round, shape (horizon+1,)."""
    _check_ensemble(traces)
    stack = np.stack([tr.squared_error for tr in traces])
    return stack.mean(axis=0) / traces[0].n


# ----- decay-rate fitting ------------------------------------------------


@dataclass(frozen=True)
class RateFit:
    """Least-squares power-law fit ``value ~ exp(intercept) * t**exponent``."""

    t_start: int
    t_end: int
    exponent: float
    intercept: float
    residual_rms: float


def fit_decay(values, window: tuple[int, int], ts=None) -> RateFit:
    """Fit a decay exponent on ``values`` over ``window`` in log-log space.

    ``values[k]`` is the sample at time ``ts[k]`` (``ts`` defaults to
    0, 1, 2, ...). Every sample inside the window must be positive and
    finite; filter zeros out before calling.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise AnalysisError("values must be a 1-D series")
    ts = np.arange(values.size) if ts is None else np.asarray(ts, dtype=float)
    if ts.shape != values.shape:
        raise AnalysisError("ts and values must have the same length")
    t0, t1 = window
    if not (0 < t0 < t1):
        raise AnalysisError(f"bad window {window}, need 0 < start < end")
    mask = (ts >= t0) & (ts <= t1)
    if mask.sum() < 3:
        raise AnalysisError(f"window {window} selects fewer than 3 samples")
    x = ts[mask]
    y = values[mask]
    if not np.all(np.isfinite(y)) or np.any(y <= 0):
        raise AnalysisError("window contains non-positive or non-finite values")
    logx, logy = np.log(x), np.log(y)
    exponent, intercept = np.polyfit(logx, logy, 1)
    resid = logy - (exponent * logx + intercept)
    return RateFit(
        t_start=int(t0),
        t_end=int(t1),
        exponent=float(exponent),
        intercept=float(intercept),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
    )


# ----- gramian screening --------------------------------------------------


@dataclass(frozen=True)
class GramianReport:
    """Windowed excitation summary for a graph/sensing pair.

    ``observability_min`` is the worst-window smallest eigenvalue of the
    summed network information matrix; ``network_min`` the same for the
    mirror-Laplacian-plus-information operator on the stacked space.
    ``convergence_precondition`` records whether the structural route
    (balance, spanning tree, collective observability) is available,
    which predicts ``network_positive``.
    """

    window_length: int
    windows: int
    samples: int
    observability_min: float
    network_min: float
    balanced: bool
    spanning_tree: bool
    collectively_observable: bool
    convergence_precondition: bool
    network_positive: bool

    def lines(self) -> list[str]:
        return [
            f"balanced: {self.balanced}",
            f"spanning tree: {self.spanning_tree}",
            f"observability gramian min eigenvalue: {self.observability_min:.6g}",
            f"network gramian min eigenvalue: {self.network_min:.6g}",
            f"collectively observable: {self.collectively_observable}",
            f"structural precondition for convergence: {self.convergence_precondition}",
            f"network gramian positive: {self.network_positive}",
        ]


def gramian_check(
    graph: SensorGraph,
    model: ObservationModel,
    window_length: int = 1,
    windows: int = 1,
    samples: int = 1,
    threshold: float = 1e-9,
) -> GramianReport:
    """Screen persistent excitation over ``windows`` windows of given length.

    For stochastic observation sources pass ``samples > 1``; expectations
    are then approximated by averaging repeated draws at each round.
    """
    if window_length < 1 or windows < 1 or samples < 1:
        raise AnalysisError("window_length, windows and samples must be positive")
    if model.n != graph.n:
        raise AnalysisError(f"model has {model.n} sensors but graph has {graph.n} nodes")
    n, dim = graph.n, model.param_dim
    mirror_big = np.kron(graph.laplacian().mirror, np.eye(dim))

    obs_min = np.inf
    net_min = np.inf
    for w in range(windows):
        obs = np.zeros((dim, dim))
        net = window_length * mirror_big.copy()
        for t in range(w * window_length, (w + 1) * window_length):
            for i in range(n):
                gram = np.zeros((dim, dim))
                for _ in range(samples):
                    gram += model.gram(i, t)
                gram /= samples
                gram = (gram + gram.T) / 2.0
                obs += gram
                block = slice(i * dim, (i + 1) * dim)
                net[block, block] += gram
        obs_min = min(obs_min, float(np.linalg.eigvalsh(obs)[0]))
        net_min = min(net_min, float(np.linalg.eigvalsh(net)[0]))

    balanced = graph.is_balanced()
    spanning = graph.has_spanning_tree()
    observable = obs_min > threshold
    return GramianReport(
        window_length=window_length,
        windows=windows,
        samples=samples,
        observability_min=obs_min,
        network_min=net_min,
        balanced=balanced,
        spanning_tree=spanning,
        collectively_observable=observable,
        convergence_precondition=balanced and spanning and observable,
        network_positive=net_min > threshold,
    )


# ----- perturbed linear recursion -----------------------------------------


def linear_recursion_sim(
    step: Schedule,
    e0,
    horizon: int,
    *,
    q_fn=None,
    perturb_fn=None,
    noise_fn=None,
    drift_fn=None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Simulate ``e(t+1) = e(t) + a(t) (Q(t) + D(t)) e(t) + a(t) (w(t) + d(t))``.

    ``q_fn(t)`` gives the nominal matrix, ``perturb_fn(t, rng)`` a
    vanishing matrix perturbation, ``noise_fn(t, rng)`` the random
    forcing and ``drift_fn(t)`` the deterministic forcing; omitted
    sources are zero. The step is evaluated at ``max(t, 1)``. Returns
    the squared-norm series of ``e``, length horizon+1.
    """
    e = np.asarray(e0, dtype=float).copy()
    if e.ndim != 1 or e.size < 1:
        raise AnalysisError("e0 must be a non-empty vector")
    horizon = int(horizon)
    if horizon < 1:
        raise AnalysisError("horizon must be at least 1")
    if rng is None:
        rng = np.random.default_rng()
    dim = e.size
    out = np.empty(horizon + 1)
    with np.errstate(over="ignore"):
        out[0] = float(e @ e)
        if not np.isfinite(out[0]):
            raise AnalysisError("initial vector too large to square")
        for t in range(horizon):
            a = float(step(max(t, 1)))
            gain = np.zeros((dim, dim))
            if q_fn is not None:
                gain += np.asarray(q_fn(t), dtype=float)
            if perturb_fn is not None:
                gain += np.asarray(perturb_fn(t, rng), dtype=float)
            force = np.zeros(dim)
            if noise_fn is not None:
                force += np.asarray(noise_fn(t, rng), dtype=float)
            if drift_fn is not None:
                force += np.asarray(drift_fn(t), dtype=float)
            e = e + a * (gain @ e) + a * force
            out[t + 1] = float(e @ e)
            if not (np.all(np.isfinite(e)) and np.isfinite(out[t + 1])):
                raise AnalysisError(f"recursion diverged at round {t + 1}")
    return out
