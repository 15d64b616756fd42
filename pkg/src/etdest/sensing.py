"""Measurement models, gain schedules, and design-condition screening.

Each sensor observes a fixed parameter vector through its own linear map
plus additive noise. Decaying step-size and trigger-threshold schedules
drive the estimator. The ``check_assumption1`` / ``check_assumption2``
functions screen a schedule family against the decay, summability, and
trigger-gap conditions the convergence guarantees rest on; they return
per-condition verdicts ("pass", "fail", or "numeric-only" when the
schedule shapes do not admit a closed-form answer) rather than a bare
boolean.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ScheduleError",
    "ModelError",
    "PowerSchedule",
    "ConstantSchedule",
    "power_schedule",
    "Schedules",
    "ObservationModel",
    "as_parameter",
    "ConditionCheck",
    "ConditionReport",
    "check_assumption1",
    "check_assumption2",
    "gap_condition",
]

Schedule = Callable[[float], float]


class ScheduleError(ValueError):
    """Schedule undefined at the requested time or misconfigured."""


class ModelError(ValueError):
    """Inconsistent observation model (shapes, dimensions, noise)."""


# ===================================================================
# Schedules
# ===================================================================


@dataclass(frozen=True)
class PowerSchedule:
    """Decaying gain ``scale * (t + offset) ** (-exponent)``.

    Evaluable wherever ``t + offset > 0``; raises ScheduleError outside
    that range. Works elementwise on numpy arrays.
    """

    scale: float
    offset: float = 0.0
    exponent: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.scale) and self.scale >= 0):
            raise ScheduleError("scale must be finite and non-negative")
        if not np.isfinite(self.offset):
            raise ScheduleError("offset must be finite")
        if not np.isfinite(self.exponent):
            raise ScheduleError("exponent must be finite")

    def __call__(self, t):
        base = np.asarray(t, dtype=float) + self.offset
        if np.any(base <= 0):
            raise ScheduleError(f"power schedule undefined at t={t} with offset={self.offset}")
        out = self.scale * base ** (-self.exponent)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class ConstantSchedule:
    """Constant gain; ``value`` may be +inf to disable triggering entirely."""

    value: float

    def __post_init__(self):
        if np.isnan(self.value) or self.value < 0:
            raise ScheduleError("constant schedule needs a non-negative value")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if t.ndim:
            return np.full(t.shape, self.value)
        return float(self.value)


def power_schedule(scale: float, offset: float = 0.0, exponent: float = 1.0) -> PowerSchedule:
    """Convenience constructor for :class:`PowerSchedule`."""
    return PowerSchedule(scale=scale, offset=offset, exponent=exponent)


def _eval(schedule: Schedule, ts: np.ndarray) -> np.ndarray:
    """Evaluate a schedule on an array of times, falling back to a loop."""
    try:
        out = np.asarray(schedule(ts), dtype=float)
        if out.shape == ts.shape:
            return out
    except ScheduleError:
        raise
    except Exception:
        pass
    return np.array([float(schedule(float(t))) for t in ts])


def _per_sensor(spec, n: int, what: str) -> list[Schedule]:
    if callable(spec):
        return [spec] * n
    items = list(spec)
    if len(items) != n:
        raise ScheduleError(f"{what}: expected {n} schedules, got {len(items)}")
    if not all(callable(s) for s in items):
        raise ScheduleError(f"{what}: entries must be callable")
    return items


@dataclass(frozen=True)
class Schedules:
    """Gain and trigger schedules for a network of sensors.

    Parameters
    ----------
    step : schedule or sequence of schedules
        Per-sensor step size; a single callable is shared by everyone.
    threshold : schedule or sequence of schedules
        Per-sensor trigger threshold.
    reference_step : schedule, optional
        Common decay profile the per-sensor steps are compared against.
        Defaults to the shared step (or the first per-sensor one).
    delta : float, optional
        Decay-splitting exponent in [0, 1/2). Treated as 0 when omitted.
    rho : float, optional
        Noise moment order (> 2) assumed by the trigger-scale default.
    threshold_floor : schedule, optional
        Non-increasing lower envelope of the thresholds; defaults to the
        pointwise minimum across sensors.
    trigger_scale : schedule, optional
        Normalizing sequence for the trigger-gap check. Defaults to
        ``reference_step(t) ** (1 - 2*(1-delta)/rho)``, which requires
        ``rho`` to be declared.
    """

    step: Schedule | Sequence[Schedule]
    threshold: Schedule | Sequence[Schedule]
    reference_step: Schedule | None = None
    delta: float | None = None
    rho: float | None = None
    threshold_floor: Schedule | None = None
    trigger_scale: Schedule | None = None

    def __post_init__(self):
        if self.delta is not None and not (0.0 <= self.delta < 0.5):
            raise ScheduleError("delta must lie in [0, 1/2)")
        if self.rho is not None and not self.rho > 2.0:
            raise ScheduleError("rho must exceed 2")
        if not callable(self.step) and not len(list(self.step)):
            raise ScheduleError("step: need at least one schedule")

    # ----- basic lookups -------------------------------------------------

    @property
    def n_declared(self) -> int:
        """Sensor count implied by per-sensor lists (1 when all shared)."""
        n = 1
        for spec in (self.step, self.threshold):
            if not callable(spec):
                n = max(n, len(list(spec)))
        return n

    def step_at(self, i: int, t) -> float:
        return self._pick(self.step, i)(t)

    def threshold_at(self, i: int, t) -> float:
        return self._pick(self.threshold, i)(t)

    def step_vector(self, t, n: int) -> np.ndarray:
        return self._vector(self.step, t, n)

    def threshold_vector(self, t, n: int) -> np.ndarray:
        return self._vector(self.threshold, t, n)

    def reference(self, t):
        return self._reference_schedule()(t)

    def f_max(self, t, n: int) -> float:
        return float(np.max(self.threshold_vector(t, n)))

    def f_min(self, t, n: int) -> float:
        return float(np.min(self.threshold_vector(t, n)))

    def floor(self, t, n: int | None = None):
        """Threshold floor f̄(t), by default the pointwise sensor minimum."""
        if self.threshold_floor is not None:
            return self.threshold_floor(t)
        n = n if n is not None else self.n_declared
        return self.f_min(t, n)

    def scale(self, t):
        """Trigger-normalizing sequence, default tied to the reference step."""
        if self.trigger_scale is not None:
            return self.trigger_scale(t)
        if self.rho is None:
            raise ScheduleError("trigger_scale default needs rho to be declared")
        delta = self.delta if self.delta is not None else 0.0
        return self.reference(t) ** (1.0 - 2.0 * (1.0 - delta) / self.rho)

    # ----- helpers -------------------------------------------------------

    def _pick(self, spec, i: int) -> Schedule:
        if callable(spec):
            return spec
        items = list(spec)
        if not (0 <= i < len(items)):
            raise ScheduleError(f"sensor index {i} out of range for {len(items)} schedules")
        return items[i]

    def _vector(self, spec, t, n: int) -> np.ndarray:
        if callable(spec):
            return np.full(n, float(spec(t)))
        items = _per_sensor(spec, n, "schedules")
        return np.array([float(s(t)) for s in items])

    def _reference_schedule(self) -> Schedule:
        if self.reference_step is not None:
            return self.reference_step
        return self.step if callable(self.step) else list(self.step)[0]


# ===================================================================
# Observation model
# ===================================================================


def as_parameter(value, dim: int | None = None) -> np.ndarray:
    """Validate a parameter vector: 1-D, finite, optionally of fixed length."""
    theta = np.asarray(value, dtype=float)
    if theta.ndim != 1 or theta.size < 1:
        raise ModelError(f"parameter must be a non-empty vector, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise ModelError("parameter entries must be finite")
    if dim is not None and theta.size != dim:
        raise ModelError(f"parameter has length {theta.size}, expected {dim}")
    return theta


class ObservationModel:
    """Per-sensor linear observations ``y_i(t) = H_i(t) theta + v_i(t)``.

    Either pass ``matrices`` (one static ``(m_i, M)`` array per sensor) or
    a ``matrix_fn(i, t)`` together with explicit dimensions. Noise is
    independent Gaussian with per-sensor standard deviation by default; a
    custom ``noise_fn(i, t, rng)`` overrides it.

    Parameters
    ----------
    matrices : sequence of ndarray, optional
        Static observation maps, one per sensor.
    noise_std : float or sequence of float
        Per-sensor noise standard deviation, broadcast from a scalar.
    matrix_fn : callable, optional
        Time-varying source ``(sensor, t) -> (m_i, M) array``. Requires
        ``n_sensors``, ``dims`` and ``param_dim``.
    noise_fn : callable, optional
        Custom noise source ``(sensor, t, rng) -> (m_i,) array``.
    """

    def __init__(
        self,
        matrices=None,
        noise_std=1.0,
        *,
        matrix_fn: Callable[[int, int], np.ndarray] | None = None,
        n_sensors: int | None = None,
        dims: Sequence[int] | None = None,
        param_dim: int | None = None,
        noise_fn: Callable[[int, int, np.random.Generator], np.ndarray] | None = None,
    ):
        if (matrices is None) == (matrix_fn is None):
            raise ModelError("pass exactly one of matrices or matrix_fn")
        if matrices is not None:
            mats = []
            for i, h in enumerate(matrices):
                h = np.asarray(h, dtype=float)
                if h.ndim != 2 or h.size == 0:
                    raise ModelError(f"sensor {i}: observation matrix must be 2-D and non-empty")
                if not np.all(np.isfinite(h)):
                    raise ModelError(f"sensor {i}: observation matrix must be finite")
                h = h.copy()
                h.setflags(write=False)
                mats.append(h)
            if not mats:
                raise ModelError("need at least one sensor")
            m_dims = [h.shape[1] for h in mats]
            if len(set(m_dims)) != 1:
                raise ModelError(f"inconsistent parameter dimensions across sensors: {sorted(set(m_dims))}")
            self.matrices: tuple[np.ndarray, ...] | None = tuple(mats)
            self.n = len(mats)
            self.param_dim = m_dims[0]
            self.dims = tuple(h.shape[0] for h in mats)
        else:
            if n_sensors is None or dims is None or param_dim is None:
                raise ModelError("matrix_fn requires n_sensors, dims and param_dim")
            if n_sensors < 1 or param_dim < 1:
                raise ModelError("n_sensors and param_dim must be positive")
            dims = tuple(int(d) for d in dims)
            if len(dims) != n_sensors or any(d < 1 for d in dims):
                raise ModelError("dims must list a positive row count per sensor")
            self.matrices = None
            self.n = int(n_sensors)
            self.param_dim = int(param_dim)
            self.dims = dims
        self._matrix_fn = matrix_fn
        self._noise_fn = noise_fn
        std = np.broadcast_to(np.asarray(noise_std, dtype=float), (self.n,)).copy()
        if not np.all(np.isfinite(std)) or np.any(std < 0):
            raise ModelError("noise_std must be finite and non-negative")
        std.setflags(write=False)
        self.noise_std = std

    @property
    def static(self) -> bool:
        return self.matrices is not None

    @property
    def m_max(self) -> int:
        return max(self.dims)

    def matrix(self, i: int, t: int) -> np.ndarray:
        """Observation map of sensor ``i`` at time ``t``."""
        self._check_sensor(i)
        if self.matrices is not None:
            return self.matrices[i]
        h = np.asarray(self._matrix_fn(i, t), dtype=float)
        if h.shape != (self.dims[i], self.param_dim):
            raise ModelError(
                f"matrix_fn({i}, {t}) returned shape {h.shape}, "
                f"expected {(self.dims[i], self.param_dim)}"
            )
        return h

    def noise(self, i: int, t: int, rng: np.random.Generator) -> np.ndarray:
        """Single noise draw for sensor ``i`` at time ``t``."""
        return self.noise_block(i, t, 1, rng)[0]

    def noise_block(self, i: int, t0: int, count: int, rng: np.random.Generator) -> np.ndarray:
        """Noise draws for ``count`` consecutive rounds, shape (count, m_i).

        The default Gaussian source consumes the stream one variate at a
        time in round order, so blocking is purely an efficiency detail:
        any chunking of the same stream yields the same values.
        """
        self._check_sensor(i)
        m = self.dims[i]
        if self._noise_fn is None:
            return self.noise_std[i] * rng.standard_normal((count, m))
        rows = []
        for t in range(t0, t0 + count):
            v = np.asarray(self._noise_fn(i, t, rng), dtype=float)
            if v.shape != (m,):
                raise ModelError(f"noise_fn({i}, {t}) returned shape {v.shape}, expected {(m,)}")
            rows.append(v)
        return np.stack(rows)

    def measure(self, theta, i: int, t: int, rng: np.random.Generator) -> np.ndarray:
        """Draw the measurement ``H_i(t) theta + v_i(t)``."""
        theta = as_parameter(theta, self.param_dim)
        return self.matrix(i, t) @ theta + self.noise(i, t, rng)

    def gram(self, i: int, t: int) -> np.ndarray:
        """``H_i(t)^T H_i(t)``, the sensor's information matrix."""
        h = self.matrix(i, t)
        return h.T @ h

    def _check_sensor(self, i: int) -> None:
        if not (isinstance(i, (int, np.integer)) and 0 <= i < self.n):
            raise ModelError(f"sensor index {i!r} out of range for n={self.n}")


# ===================================================================
# Condition screening
# ===================================================================


@dataclass
class ConditionCheck:
    """Outcome of one screened condition."""

    verdict: str  # "pass" | "fail" | "numeric-only"
    details: dict = field(default_factory=dict)


@dataclass
class ConditionReport:
    """Named condition checks plus an overall verdict.

    ``passed`` is True when every condition passes, False when any fails,
    and None when at least one condition could only be evaluated
    numerically (no symbolic answer for the given schedule shapes).
    """

    conditions: dict[str, ConditionCheck]

    @property
    def passed(self) -> bool | None:
        verdicts = [c.verdict for c in self.conditions.values()]
        if any(v == "fail" for v in verdicts):
            return False
        if any(v == "numeric-only" for v in verdicts):
            return None
        return True

    def lines(self) -> list[str]:
        out = []
        for name, check in self.conditions.items():
            parts = ", ".join(f"{k}={_fmt(v)}" for k, v in check.details.items())
            out.append(f"{name}: {check.verdict}" + (f" ({parts})" if parts else ""))
        return out


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _as_power(schedule) -> tuple[float, float, float] | None:
    """(scale, offset, exponent) if the schedule is a recognized power/constant."""
    if isinstance(schedule, PowerSchedule):
        return (schedule.scale, schedule.offset, schedule.exponent)
    if isinstance(schedule, ConstantSchedule):
        if not np.isfinite(schedule.value):
            return None
        return (schedule.value, 0.0, 0.0)
    return None


def _grid(horizon: int, points: int = 256) -> np.ndarray:
    if horizon < 8:
        raise ScheduleError("horizon too short for condition screening (need >= 8)")
    g = np.unique(np.rint(np.geomspace(1, horizon, points)).astype(int))
    return g


def _trend(values: np.ndarray) -> str:
    mid = values[len(values) // 2]
    end = values[-1]
    if mid == 0 and end == 0:
        return "flat"
    if mid == 0:
        return "increasing"
    r = end / mid
    if r < 0.99:
        return "decreasing"
    if r > 1.01:
        return "increasing"
    return "flat"


def check_assumption1(s: Schedules, horizon: int = 10_000) -> ConditionReport:
    """Screen step and threshold schedules against the decay conditions.

    Conditions reported, in order: per-sensor steps track the reference
    profile; the reference step vanishes; its plain sum diverges; the
    inverse-gap sequence ``1/a(t+1) - 1/a(t)`` settles to a finite limit;
    the ``2*(1-delta)`` power sum converges; the largest threshold decays
    faster than ``a(t)**delta``; and the mixed sum
    ``sum a(t)**(1-delta) * f_max(t)`` converges.

    Verdicts are symbolic for power-law and constant schedules and
    "numeric-only" otherwise; numeric evidence is attached either way.
    """
    n = s.n_declared
    delta = s.delta if s.delta is not None else 0.0
    ts = _grid(horizon)
    dense = np.arange(1, int(horizon) + 1, dtype=float)

    ref = s._reference_schedule()
    ref_pow = _as_power(ref)
    steps = s.step if not callable(s.step) else [s.step]
    step_pows = [_as_power(x) for x in steps]
    thresholds = s.threshold if not callable(s.threshold) else [s.threshold]
    thr_pows = [_as_power(x) for x in thresholds]

    ref_vals = _eval(ref, dense)
    fmax_dense = np.max(np.stack([_eval(f, dense) for f in thresholds]), axis=0)
    conditions: dict[str, ConditionCheck] = {}

    # -- per-sensor steps track the reference profile
    gaps = np.stack([np.abs(_eval(a, ts) / _eval(ref, ts) - 1.0) for a in steps])
    gap_end = float(np.max(gaps[:, -1]))
    if ref_pow and all(p is not None for p in step_pows):
        ok = all(
            abs(p[2] - ref_pow[2]) < 1e-12 and abs(p[0] - ref_pow[0]) < 1e-12 for p in step_pows
        )
        verdict = "pass" if ok else "fail"
    else:
        verdict = "numeric-only"
    conditions["step_matches_reference"] = ConditionCheck(
        verdict, {"max_gap_at_horizon": gap_end, "gap_trend": _trend(np.max(gaps, axis=0))}
    )

    # -- reference step decays to zero
    if ref_pow:
        scale, _, expo = ref_pow
        verdict = "pass" if (scale > 0 and expo > 0) else "fail"
    else:
        verdict = "numeric-only"
    conditions["step_vanishes"] = ConditionCheck(
        verdict, {"value_at_horizon": float(ref_vals[-1]), "trend": _trend(ref_vals[ts - 1])}
    )

    # -- plain step sum diverges
    if ref_pow:
        scale, _, expo = ref_pow
        verdict = "pass" if (scale > 0 and expo <= 1.0) else "fail"
    else:
        verdict = "numeric-only"
    conditions["step_sum_diverges"] = ConditionCheck(
        verdict, {"partial_sum": float(ref_vals.sum())}
    )

    # -- inverse gap settles to a finite limit
    inv_gap = 1.0 / float(ref(horizon)) - 1.0 / float(ref(horizon - 1))
    if ref_pow:
        scale, _, expo = ref_pow
        if scale <= 0:
            verdict, limit = "fail", float("nan")
        elif expo < 1.0:
            verdict, limit = "pass", 0.0
        elif expo == 1.0:
            verdict, limit = "pass", 1.0 / scale
        else:
            verdict, limit = "fail", float("inf")
    else:
        verdict, limit = "numeric-only", float("nan")
    conditions["inverse_gap_limit"] = ConditionCheck(
        verdict, {"estimate_at_horizon": float(inv_gap), "symbolic_limit": limit}
    )

    # -- squared-order step sum converges
    power_sum = float((ref_vals ** (2.0 * (1.0 - delta))).sum())
    if ref_pow:
        scale, _, expo = ref_pow
        verdict = "pass" if (scale > 0 and 2.0 * (1.0 - delta) * expo > 1.0) else "fail"
    else:
        verdict = "numeric-only"
    conditions["step_power_sum_converges"] = ConditionCheck(verdict, {"partial_sum": power_sum})

    # -- thresholds decay below the delta-power of the step
    ratio = fmax_dense[ts - 1] / ref_vals[ts - 1] ** delta
    live_thr = [p for p in thr_pows if p is None or p[0] > 0]
    all_zero = all(p is not None and p[0] == 0 for p in thr_pows)
    if all_zero:
        verdict = "pass"
    elif ref_pow and all(p is not None for p in thr_pows):
        e_min = min(p[2] for p in live_thr)
        verdict = "pass" if e_min > delta * ref_pow[2] else "fail"
    else:
        verdict = "numeric-only"
    conditions["threshold_ratio_vanishes"] = ConditionCheck(
        verdict, {"ratio_at_horizon": float(ratio[-1]), "ratio_trend": _trend(ratio)}
    )

    # -- mixed step/threshold sum converges
    mixed = float((ref_vals ** (1.0 - delta) * fmax_dense).sum())
    if all_zero:
        verdict = "pass"
    elif ref_pow and all(p is not None for p in thr_pows):
        e_min = min(p[2] for p in live_thr)
        a_exp = ref_pow[2]
        ok = a_exp * (1.0 - delta) + e_min > 1.0
        if ok and abs(a_exp - 1.0) < 1e-12 and s.rho is not None:
            # unit-exponent steps additionally pin the admissible threshold
            # window through the noise moment order
            ok = e_min + 2.0 * (1.0 - delta) / s.rho < 0.5
        verdict = "pass" if ok else "fail"
    else:
        verdict = "numeric-only"
    conditions["threshold_mixed_sum_converges"] = ConditionCheck(
        verdict, {"partial_sum": mixed}
    )

    return ConditionReport(conditions)


def gap_condition(gap: Schedule, horizon: int = 10_000) -> ConditionCheck:
    """Screen a trigger-gap function ``g`` on [1, horizon].

    Checks that g is non-decreasing, eventually sits below the identity,
    and that the lookahead increment ``g(t + ceil(g(t))) - g(t)`` stays
    bounded away from zero over the tail (its minimum must not collapse
    between the early and late halves of the tail window).
    """
    h = int(horizon)
    ts = _grid(h, points=512).astype(float)
    g = _eval(gap, ts)
    if not np.all(np.isfinite(g)) or np.any(g < 0):
        return ConditionCheck("fail", {"note": "gap function must be finite and non-negative"})
    monotone = bool(np.all(np.diff(g) >= -1e-9 * (1.0 + np.abs(g[:-1]))))

    tail = ts >= h / 2
    ratio = g[tail] / ts[tail]
    below = bool(ratio[-1] <= 1.0 + 1e-9 or ratio[-1] < 0.999 * ratio[0])

    probe = np.unique(np.rint(np.geomspace(h / 2, h, 33)).astype(int)).astype(float)
    g_probe = _eval(gap, probe)
    ahead = _eval(gap, probe + np.ceil(g_probe))
    inc = ahead - g_probe
    half = len(inc) // 2
    early = float(np.min(inc[:half])) if half else float("nan")
    late = float(np.min(inc[half:]))
    growing = bool(late > 0 and (half == 0 or late >= 0.9 * early))

    verdict = "pass" if (monotone and below and growing) else "fail"
    return ConditionCheck(
        verdict,
        {
            "monotone": monotone,
            "end_over_t": float(ratio[-1]),
            "min_increment_early": early,
            "min_increment_late": late,
        },
    )


def check_assumption2(
    s: Schedules,
    horizon: int = 10_000,
    scales: Sequence[float] = (0.1, 1.0, 10.0),
) -> ConditionReport:
    """Screen the trigger-design conditions on [1, horizon].

    Checks that the threshold floor is non-increasing and sits below every
    sensor threshold, that the normalizing sequence is non-increasing and
    dominated by the step-derived bound, and that the induced gap function
    ``a0 * floor(2t) / scale(t)`` passes :func:`gap_condition` for every
    probe constant ``a0``.
    """
    n = s.n_declared
    ts = _grid(horizon)
    conditions: dict[str, ConditionCheck] = {}

    def floor_fn(t):
        return s.floor(t, n)

    fl = _eval(floor_fn, ts.astype(float))
    conditions["floor_non_increasing"] = ConditionCheck(
        "pass" if np.all(np.diff(fl) <= 1e-12 * (1 + np.abs(fl[:-1]))) else "fail",
        {"value_at_horizon": float(fl[-1])},
    )

    fmin = np.array([s.f_min(float(t), n) for t in ts])
    gap_over = float(np.max(fl - fmin))
    conditions["floor_below_thresholds"] = ConditionCheck(
        "pass" if gap_over <= 1e-12 else "fail", {"max_excess": gap_over}
    )

    sc = _eval(s.scale, ts.astype(float))
    conditions["scale_non_increasing"] = ConditionCheck(
        "pass" if np.all(np.diff(sc) <= 1e-12 * (1 + np.abs(sc[:-1]))) else "fail",
        {"value_at_horizon": float(sc[-1])},
    )

    delta = s.delta if s.delta is not None else 0.0
    if s.rho is not None:
        bound_exp = 1.0 - 2.0 * (1.0 - delta) / s.rho
        bound = _eval(lambda t: s.reference(t) ** bound_exp, ts.astype(float))
        rel = sc / bound
        verdict = "fail" if _trend(rel) == "increasing" else "pass"
        conditions["scale_within_step_bound"] = ConditionCheck(
            verdict, {"ratio_at_horizon": float(rel[-1]), "ratio_trend": _trend(rel)}
        )
    else:
        conditions["scale_within_step_bound"] = ConditionCheck(
            "numeric-only", {"note": "rho not declared, bound unavailable"}
        )

    per_scale = {}
    worst = "pass"
    for a0 in scales:
        sub = gap_condition(lambda t, a0=a0: a0 * s.floor(2.0 * np.asarray(t), n) / s.scale(t), horizon)
        per_scale[f"a0={a0:g}"] = sub.verdict
        if sub.verdict == "fail":
            worst = "fail"
    conditions["gap_function"] = ConditionCheck(worst, per_scale)

    return ConditionReport(conditions)
