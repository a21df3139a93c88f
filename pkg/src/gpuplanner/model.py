"""Interference-aware performance model for co-located DNN inference on a GPU.

All latencies are in milliseconds, data sizes in MB, bandwidth in MB/ms
(10 GB/s == 10 MB/ms), frequency in MHz, power in W.  Request rates are
req/s at the API boundary and req/ms internally.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import NonPositiveDenominatorError, OverAllocatedError

# Tolerance for the device capacity check; grid sums accumulate float noise.
_CAPACITY_EPS = 1e-9


@dataclass(frozen=True)
class WorkloadSpec:
    """A workload's SLO contract and per-request transfer sizes."""

    name: str
    slo_ms: float
    rate_rps: float
    d_load_mb: float
    d_feedback_mb: float

    def __post_init__(self):
        if not self.name:
            raise ValueError("workload name must be non-empty")
        if self.slo_ms <= 0:
            raise ValueError(f"slo_ms must be positive, got {self.slo_ms}")
        if self.rate_rps <= 0:
            raise ValueError(f"rate_rps must be positive, got {self.rate_rps}")
        if self.d_load_mb < 0 or self.d_feedback_mb < 0:
            raise ValueError("transfer sizes must be non-negative")


@dataclass(frozen=True)
class WorkloadCoefficients:
    """Workload-specific model coefficients.

    k1..k5 shape the solo active-time curve (quadratic in batch, roughly
    inverse in the resource fraction).  The power and cache-utilization
    fits are linear in processing ability (batch / active time).
    alpha_cache scales the active-time inflation per unit of co-located
    cache-utilization sum.
    """

    n_kernels: int
    k_sch_ms: float
    k1: float
    k2: float
    k3: float
    k4: float
    k5: float
    alpha_power_w: float
    beta_power_w: float
    alpha_cacheutil: float
    beta_cacheutil: float
    alpha_cache: float

    def __post_init__(self):
        if self.n_kernels < 1:
            raise ValueError(f"n_kernels must be >= 1, got {self.n_kernels}")
        if self.k_sch_ms < 0:
            raise ValueError(f"k_sch_ms must be >= 0, got {self.k_sch_ms}")
        if self.alpha_cache < 0:
            raise ValueError(f"alpha_cache must be >= 0, got {self.alpha_cache}")


@dataclass(frozen=True)
class HardwareProfile:
    """Hardware-specific coefficients plus allocation granularity and price."""

    gpu_type: str
    power_max_w: float
    freq_max_mhz: float
    power_idle_w: float
    pcie_bw_mb_per_ms: float
    alpha_f: float
    alpha_sch_ms: float
    beta_sch_ms: float
    r_unit: float = 0.025
    r_max: float = 1.0
    price_per_hour: float = 1.0
    # Linear frequency model extrapolates to nonsense under extreme
    # overload; predictions are floored at f_min_frac * freq_max_mhz.
    f_min_frac: float = 0.3

    def __post_init__(self):
        if self.power_idle_w < 0 or self.power_max_w <= self.power_idle_w:
            raise ValueError("requires power_max_w > power_idle_w >= 0")
        if self.freq_max_mhz <= 0:
            raise ValueError(f"freq_max_mhz must be positive, got {self.freq_max_mhz}")
        if self.pcie_bw_mb_per_ms <= 0:
            raise ValueError("pcie_bw_mb_per_ms must be positive")
        if self.r_max != 1.0:
            raise ValueError(f"r_max must be 1.0, got {self.r_max}")
        if not 0 < self.r_unit <= self.r_max:
            raise ValueError(f"r_unit must be in (0, {self.r_max}], got {self.r_unit}")
        if self.price_per_hour <= 0:
            raise ValueError("price_per_hour must be positive")
        if not 0 < self.f_min_frac <= 1:
            raise ValueError("f_min_frac must be in (0, 1]")

    @property
    def f_min_mhz(self) -> float:
        return self.f_min_frac * self.freq_max_mhz


@dataclass(frozen=True)
class Allocation:
    """One workload's share of a device: resource fraction and batch size.

    Committed allocations keep r in (0, 1]; values above the device maximum
    only occur in infeasible proposals returned by the allocation loop, and
    every capacity check rejects them before prediction or planning.
    """

    workload: str
    r: float
    batch: int

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError(f"r must be positive, got {self.r}")
        if self.batch < 1:
            raise ValueError(f"batch must be >= 1, got {self.batch}")


@dataclass(frozen=True)
class LatencyBreakdown:
    """Predicted per-workload latency components and throughput."""

    t_load_ms: float
    t_sch_ms: float
    t_act_ms: float
    freq_mhz: float
    t_gpu_ms: float
    t_feedback_ms: float
    t_inf_ms: float
    throughput_rps: float
    power_w: float       # this workload's solo power draw at its (batch, r)
    cache_util: float    # this workload's solo cache utilization at its (batch, r)


@dataclass(frozen=True)
class SloCheck:
    latency_ok: bool
    throughput_ok: bool

    @property
    def ok(self) -> bool:
        return self.latency_ok and self.throughput_ok


def transfer_latencies(
    spec: WorkloadSpec, batch: int, hw: HardwareProfile
) -> tuple[float, float]:
    """PCIe load/feedback latency of one batch, in ms."""
    t_load = spec.d_load_mb * batch / hw.pcie_bw_mb_per_ms
    t_feedback = spec.d_feedback_mb * batch / hw.pcie_bw_mb_per_ms
    return t_load, t_feedback


def solo_active_time(coef: WorkloadCoefficients, batch: int, r: float) -> float:
    """GPU active time (ms) of a batch when the workload runs alone."""
    denom = r + coef.k4
    if denom <= 0:
        raise NonPositiveDenominatorError(
            f"r + k4 = {denom} must be positive (r={r}, k4={coef.k4})"
        )
    return (coef.k1 * batch * batch + coef.k2 * batch + coef.k3) / denom + coef.k5


def _require_positive_active_time(k_act: float, batch: int, r: float) -> None:
    if k_act <= 0:
        raise NonPositiveDenominatorError(
            f"active time {k_act} ms at (batch={batch}, r={r}) must be positive; "
            f"coefficients are corrupt"
        )


def solo_power(coef: WorkloadCoefficients, batch: int, r: float) -> float:
    """Solo power draw (W), linear in processing ability batch/k_act."""
    k_act = solo_active_time(coef, batch, r)
    _require_positive_active_time(k_act, batch, r)
    return coef.alpha_power_w * (batch / k_act) + coef.beta_power_w


def solo_cache_util(coef: WorkloadCoefficients, batch: int, r: float) -> float:
    """Solo L2-cache utilization, linear in processing ability, clamped to [0, 1]."""
    k_act = solo_active_time(coef, batch, r)
    _require_positive_active_time(k_act, batch, r)
    c = coef.alpha_cacheutil * (batch / k_act) + coef.beta_cacheutil
    return min(1.0, max(0.0, c))


def sched_delay_increase(hw: HardwareProfile, n_colocated: int) -> float:
    """Per-kernel scheduling-delay increase (ms) from device co-location.

    Zero with a single resident workload.  Floored at zero: fitted
    coefficients can turn the linear form negative at small counts.
    """
    if n_colocated <= 1:
        return 0.0
    return max(0.0, hw.alpha_sch_ms * n_colocated + hw.beta_sch_ms)


def sched_delay(
    coef: WorkloadCoefficients, hw: HardwareProfile, n_colocated: int
) -> float:
    """Total kernel scheduling delay (ms) for one batch."""
    return (coef.k_sch_ms + sched_delay_increase(hw, n_colocated)) * coef.n_kernels


def active_time_with_interference(
    coef: WorkloadCoefficients, batch: int, r: float, co_cache_sum: float
) -> float:
    """Active time (ms) inflated by co-runners' summed cache utilization."""
    return solo_active_time(coef, batch, r) * (1.0 + coef.alpha_cache * co_cache_sum)


def power_demand(hw: HardwareProfile, solo_powers: Iterable[float]) -> float:
    """Device power demand (W): idle draw plus all residents' solo power."""
    return hw.power_idle_w + sum(solo_powers)


def gpu_frequency(hw: HardwareProfile, p_demand: float) -> float:
    """Operating frequency (MHz): max below the cap, linear decay above it."""
    if p_demand <= hw.power_max_w:
        return hw.freq_max_mhz
    f = hw.freq_max_mhz + hw.alpha_f * (p_demand - hw.power_max_w)
    return max(hw.f_min_mhz, f)


class _Entry:
    """Per-workload constants pre-reduced for repeated device evaluation.

    The arithmetic below must mirror the public operations expression for
    expression, so that planner/oracle fast paths agree bit-for-bit with
    predict_gpu.
    """

    __slots__ = (
        "name", "batch", "gamma", "k4", "k5", "k_sch", "n_kernels",
        "alpha_cache", "alpha_p", "beta_p", "alpha_c", "beta_c",
        "t_load", "t_feedback", "t_half", "rate_rps",
    )

    def __init__(self, spec: WorkloadSpec, coef: WorkloadCoefficients,
                 batch: int, hw: HardwareProfile):
        self.name = spec.name
        self.batch = batch
        self.gamma = coef.k1 * batch * batch + coef.k2 * batch + coef.k3
        self.k4 = coef.k4
        self.k5 = coef.k5
        self.k_sch = coef.k_sch_ms
        self.n_kernels = coef.n_kernels
        self.alpha_cache = coef.alpha_cache
        self.alpha_p = coef.alpha_power_w
        self.beta_p = coef.beta_power_w
        self.alpha_c = coef.alpha_cacheutil
        self.beta_c = coef.beta_cacheutil
        self.t_load = spec.d_load_mb * batch / hw.pcie_bw_mb_per_ms
        self.t_feedback = spec.d_feedback_mb * batch / hw.pcie_bw_mb_per_ms
        self.t_half = spec.slo_ms / 2.0
        self.rate_rps = spec.rate_rps


def _eval_entries(
    entries: Sequence[_Entry], rs: Sequence[float], hw: HardwareProfile
) -> list[tuple[float, float, float, float, float, float, float, float, float, float]]:
    """Evaluate the device state; one result tuple per entry.

    Tuple layout matches LatencyBreakdown field order.
    """
    n = len(entries)
    delta = 0.0 if n <= 1 else max(0.0, hw.alpha_sch_ms * n + hw.beta_sch_ms)
    k_acts = []
    powers = []
    caches = []
    for e, r in zip(entries, rs):
        denom = r + e.k4
        if denom <= 0:
            raise NonPositiveDenominatorError(
                f"r + k4 = {denom} must be positive (r={r}, k4={e.k4})"
            )
        k_act = e.gamma / denom + e.k5
        _require_positive_active_time(k_act, e.batch, r)
        ability = e.batch / k_act
        c = e.alpha_c * ability + e.beta_c
        k_acts.append(k_act)
        powers.append(e.alpha_p * ability + e.beta_p)
        caches.append(min(1.0, max(0.0, c)))

    p_dem = hw.power_idle_w + sum(powers)
    if p_dem <= hw.power_max_w:
        f = hw.freq_max_mhz
    else:
        f = max(hw.f_min_mhz, hw.freq_max_mhz + hw.alpha_f * (p_dem - hw.power_max_w))
    cache_total = sum(caches)
    scale = f / hw.freq_max_mhz

    out = []
    for i, e in enumerate(entries):
        t_sch = (e.k_sch + delta) * e.n_kernels
        co_cache = cache_total - caches[i]
        t_act = k_acts[i] * (1.0 + e.alpha_cache * co_cache)
        t_gpu = (t_sch + t_act) / scale
        t_inf = e.t_load + t_gpu + e.t_feedback
        throughput = e.batch / (t_gpu + e.t_feedback) * 1000.0
        out.append((e.t_load, t_sch, t_act, f, t_gpu, e.t_feedback, t_inf,
                    throughput, powers[i], caches[i]))
    return out


def predict_gpu(
    allocations: Sequence[Allocation],
    specs: Mapping[str, WorkloadSpec],
    coefs: Mapping[str, WorkloadCoefficients],
    hw: HardwareProfile,
) -> dict[str, LatencyBreakdown]:
    """Predict every resident workload's latency breakdown and throughput.

    Co-location effects (scheduling delay, cache contention, power-driven
    frequency reduction) are derived from all residents' current (batch, r).
    """
    total_r = sum(a.r for a in allocations)
    if total_r > hw.r_max + _CAPACITY_EPS:
        raise OverAllocatedError(
            f"allocated {total_r:.6f} exceeds r_max {hw.r_max}"
        )
    entries = [
        _Entry(specs[a.workload], coefs[a.workload], a.batch, hw)
        for a in allocations
    ]
    rows = _eval_entries(entries, [a.r for a in allocations], hw)
    return {
        a.workload: LatencyBreakdown(*row) for a, row in zip(allocations, rows)
    }


def slo_check(breakdown: LatencyBreakdown, spec: WorkloadSpec) -> SloCheck:
    """Check the half-SLO latency budget and the arrival-rate floor."""
    return SloCheck(
        latency_ok=breakdown.t_inf_ms <= spec.slo_ms / 2.0,
        throughput_ok=breakdown.throughput_rps >= spec.rate_rps,
    )
