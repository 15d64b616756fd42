"""Event-triggered distributed estimation over directed sensor networks."""

__version__ = "0.1.0"

from .analysis import (
    AnalysisError,
    GramianReport,
    RateFit,
    communication_rate,
    fit_decay,
    gramian_check,
    linear_recursion_sim,
    mse,
    mse_series,
    rate_series,
)
from .baselines import (
    BASELINE_KINDS,
    BaselineConfig,
    BaselineError,
    BaselineState,
    baseline_step,
    run_baseline,
)
from .config import ConfigError, ExperimentConfig, schedule_from_spec, schedule_to_spec
from .estimator import (
    DELIVERY_MODES,
    DivergenceError,
    EstimatorState,
    network_step,
    run,
    trigger_check,
)
from .graph import GenerationError, GraphError, LaplacianPair, SensorGraph, random_geometric
from .harness import (
    MonteCarloResult,
    RunSummary,
    compare_experiment,
    run_experiment,
    write_aggregate_csv,
    write_estimates_csv,
    write_events_csv,
    write_final_estimates_csv,
)
from .seeding import sensor_streams
from .sensing import (
    ConditionCheck,
    ConditionReport,
    ConstantSchedule,
    ObservationModel,
    PowerSchedule,
    ScheduleError,
    Schedules,
    check_assumption1,
    check_assumption2,
    gap_condition,
    power_schedule,
)
from .trace import RunTrace, TriggerEvent

__all__ = [
    "__version__",
    "AnalysisError",
    "GramianReport",
    "RateFit",
    "communication_rate",
    "fit_decay",
    "gramian_check",
    "linear_recursion_sim",
    "mse",
    "mse_series",
    "rate_series",
    "BASELINE_KINDS",
    "BaselineConfig",
    "BaselineError",
    "BaselineState",
    "baseline_step",
    "run_baseline",
    "ConfigError",
    "ExperimentConfig",
    "schedule_from_spec",
    "schedule_to_spec",
    "DELIVERY_MODES",
    "DivergenceError",
    "EstimatorState",
    "network_step",
    "run",
    "trigger_check",
    "GenerationError",
    "GraphError",
    "LaplacianPair",
    "SensorGraph",
    "random_geometric",
    "MonteCarloResult",
    "RunSummary",
    "compare_experiment",
    "run_experiment",
    "write_aggregate_csv",
    "write_estimates_csv",
    "write_events_csv",
    "write_final_estimates_csv",
    "sensor_streams",
    "ConditionCheck",
    "ConditionReport",
    "ConstantSchedule",
    "ObservationModel",
    "PowerSchedule",
    "ScheduleError",
    "Schedules",
    "check_assumption1",
    "check_assumption2",
    "gap_condition",
    "power_schedule",
    "RunTrace",
    "TriggerEvent",
]
