"""SLO-aware, interference-aware GPU provisioning for co-located inference."""

from .baselines import bestfit_throughput, ffd_plus
from .calibration import (
    ActiveTimeFit,
    ColoSample,
    InterferenceFit,
    PowerCacheFit,
    SoloSample,
    default_profile_grid,
    fit_active_time,
    fit_interference,
    fit_power_cache,
)
from .model import (
    Allocation,
    HardwareProfile,
    LatencyBreakdown,
    SloCheck,
    WorkloadCoefficients,
    WorkloadSpec,
    active_time_with_interference,
    gpu_frequency,
    power_demand,
    predict_gpu,
    sched_delay,
    sched_delay_increase,
    slo_check,
    solo_active_time,
    solo_cache_util,
    solo_power,
    transfer_latencies,
)
from .oracle import OracleBudget, exhaustive_plan
from .planner import (
    GpuPlan,
    Plan,
    PlanStats,
    alloc_gpus,
    appropriate_batch,
    lower_bound_resources,
    plan,
    plan_cost,
    select_gpu_type,
)
from .simulate import SimConfig, SimReport, WorkloadReport, simulate

__all__ = [
    "ActiveTimeFit",
    "Allocation",
    "ColoSample",
    "GpuPlan",
    "HardwareProfile",
    "InterferenceFit",
    "LatencyBreakdown",
    "OracleBudget",
    "Plan",
    "PlanStats",
    "PowerCacheFit",
    "SimConfig",
    "SimReport",
    "SloCheck",
    "SoloSample",
    "WorkloadCoefficients",
    "WorkloadReport",
    "WorkloadSpec",
    "active_time_with_interference",
    "alloc_gpus",
    "appropriate_batch",
    "bestfit_throughput",
    "default_profile_grid",
    "exhaustive_plan",
    "ffd_plus",
    "fit_active_time",
    "fit_interference",
    "fit_power_cache",
    "gpu_frequency",
    "lower_bound_resources",
    "plan",
    "plan_cost",
    "power_demand",
    "predict_gpu",
    "sched_delay",
    "sched_delay_increase",
    "select_gpu_type",
    "simulate",
    "slo_check",
    "solo_active_time",
    "solo_cache_util",
    "solo_power",
    "transfer_latencies",
]
