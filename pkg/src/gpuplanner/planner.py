"""Cost-minimal provisioning: closed-form bounds, allocation loop, placement.

Resource fractions are handled internally as integer multiples of the
hardware allocation unit, which keeps capacity arithmetic and tie-breaks
exact.  Floats appear only at the public API boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import (
    BatchCapExceededError,
    InfeasibleError,
    InfeasibleResourceError,
    InfeasibleSloError,
)
from .model import (
    Allocation,
    HardwareProfile,
    LatencyBreakdown,
    WorkloadCoefficients,
    WorkloadSpec,
    _Entry,
    _eval_entries,
    predict_gpu,
    slo_check,
)

# Index of t_inf in the tuples produced by _eval_entries.
_T_INF = 6

DEFAULT_BATCH_CAP = 32


@dataclass
class GpuPlan:
    """Allocations committed to one device, with model predictions."""

    gpu_index: int
    allocations: list[Allocation]
    predicted: dict[str, LatencyBreakdown]
    fragment_r: float


@dataclass
class Plan:
    """A full provisioning plan across devices of one GPU type."""

    strategy: str
    gpu_type: str
    gpus: list[GpuPlan]
    cost_per_hour: float
    per_workload_r_inter: dict[str, float]
    diagnostics: list[str] = field(default_factory=list)

    @property
    def gpu_count(self) -> int:
        return len(self.gpus)


@dataclass
class PlanStats:
    """Operation counters for empirical complexity measurements."""

    model_evals: int = 0      # per-workload model evaluations
    candidate_gpus: int = 0   # (workload, candidate GPU) allocation attempts


def max_units(hw: HardwareProfile) -> int:
    return int(round(hw.r_max / hw.r_unit))


def appropriate_batch(
    spec: WorkloadSpec, hw: HardwareProfile, b_max: int = DEFAULT_BATCH_CAP
) -> int:
    """Smallest batch that sustains the arrival rate inside the half-SLO budget."""
    rate = spec.rate_rps / 1000.0  # req/ms
    b = math.ceil(
        spec.slo_ms * rate * hw.pcie_bw_mb_per_ms
        / (2.0 * (hw.pcie_bw_mb_per_ms + rate * spec.d_load_mb))
    )
    b = max(1, b)
    if b > b_max:
        raise BatchCapExceededError(
            spec.name,
            f"needs batch {b} > cap {b_max}; a single replica cannot meet "
            f"{spec.rate_rps} req/s within {spec.slo_ms} ms",
        )
    return b


def _lower_bound_units(
    spec: WorkloadSpec,
    coef: WorkloadCoefficients,
    hw: HardwareProfile,
    batch: int,
) -> int:
    delta = (
        spec.slo_ms / 2.0
        - (spec.d_load_mb + spec.d_feedback_mb) * batch / hw.pcie_bw_mb_per_ms
        - coef.k5
        - coef.k_sch_ms * coef.n_kernels
    )
    if delta <= 0:
        raise InfeasibleSloError(
            spec.name,
            f"latency budget exhausted by fixed terms (delta={delta:.6f} ms)",
        )
    gamma = coef.k1 * batch * batch + coef.k2 * batch + coef.k3
    units = math.ceil(gamma / (delta * hw.r_unit) - coef.k4 / hw.r_unit)
    units = max(1, units)
    if units > max_units(hw):
        raise InfeasibleResourceError(
            spec.name,
            f"needs {units * hw.r_unit:.3f} of a device even running alone",
        )
    return units


def lower_bound_resources(
    spec: WorkloadSpec,
    coef: WorkloadCoefficients,
    hw: HardwareProfile,
    batch: int,
) -> float:
    """Minimum resource fraction meeting the half-SLO budget when run alone."""
    return _lower_bound_units(spec, coef, hw, batch) * hw.r_unit


def _alloc_units(
    entries: Sequence[_Entry],
    units: Sequence[int],
    hw: HardwareProfile,
    cap: int,
    stats: PlanStats | None = None,
) -> list[int]:
    """Grow violating allocations one unit per pass until clean or over capacity.

    Each workload's latency is checked against the current device state,
    including bumps applied earlier in the same pass.  The result may sum
    beyond the capacity; that is the caller-visible infeasibility marker.
    """
    units = list(units)
    n = len(entries)
    flag = True
    while sum(units) <= cap and flag:
        flag = False
        rows = None
        for i in range(n):
            if rows is None:
                rs = [u * hw.r_unit for u in units]
                rows = _eval_entries(entries, rs, hw)
                if stats is not None:
                    stats.model_evals += n
            if rows[i][_T_INF] > entries[i].t_half:
                units[i] += 1
                flag = True
                rows = None
    return units


def alloc_gpus(
    specs: Mapping[str, WorkloadSpec],
    coefs: Mapping[str, WorkloadCoefficients],
    hw: HardwareProfile,
    current: Sequence[Allocation],
    workload: str,
    batch: int,
    r_lower: float,
) -> list[Allocation]:
    """Place one workload on a device, reallocating residents as needed.

    Returns the joint allocation after the adjustment loop.  The caller
    must treat a result whose fractions sum beyond ``hw.r_max`` as
    infeasible for this device.
    """
    entries = [
        _Entry(specs[a.workload], coefs[a.workload], a.batch, hw) for a in current
    ]
    entries.append(_Entry(specs[workload], coefs[workload], batch, hw))
    units = [int(round(a.r / hw.r_unit)) for a in current]
    units.append(int(round(r_lower / hw.r_unit)))
    new_units = _alloc_units(entries, units, hw, max_units(hw))
    batches = [a.batch for a in current] + [batch]
    names = [a.workload for a in current] + [workload]
    return [
        Allocation(name, u * hw.r_unit, b)
        for name, u, b in zip(names, new_units, batches)
    ]


def violation_diagnostics(
    gpus: Sequence[GpuPlan], specs: Mapping[str, WorkloadSpec]
) -> list[str]:
    """Human-readable list of predicted SLO violations in a set of devices."""
    out = []
    for gpu in gpus:
        for alloc in gpu.allocations:
            spec = specs[alloc.workload]
            bd = gpu.predicted[alloc.workload]
            check = slo_check(bd, spec)
            if not check.latency_ok:
                out.append(
                    f"{alloc.workload} on gpu {gpu.gpu_index}: predicted latency "
                    f"{bd.t_inf_ms:.3f} ms exceeds half-SLO {spec.slo_ms / 2.0:.3f} ms"
                )
            if not check.throughput_ok:
                out.append(
                    f"{alloc.workload} on gpu {gpu.gpu_index}: predicted throughput "
                    f"{bd.throughput_rps:.1f} req/s below rate {spec.rate_rps:.1f} req/s"
                )
    return out


def _build_plan(
    strategy: str,
    hw: HardwareProfile,
    placement: Sequence[tuple[Sequence[str], Sequence[int], Sequence[int]]],
    specs: Mapping[str, WorkloadSpec],
    coefs: Mapping[str, WorkloadCoefficients],
    lb_units: Mapping[str, int],
) -> Plan:
    """Assemble a Plan from (names, units, batches) per device."""
    cap = max_units(hw)
    gpus = []
    r_inter: dict[str, float] = {}
    for index, (names, units, batches) in enumerate(placement):
        allocations = [
            Allocation(name, u * hw.r_unit, b)
            for name, u, b in zip(names, units, batches)
        ]
        predicted = predict_gpu(allocations, specs, coefs, hw)
        fragment = (cap - sum(units)) * hw.r_unit
        gpus.append(GpuPlan(index, allocations, predicted, fragment))
        for name, u in zip(names, units):
            r_inter[name] = (u - lb_units[name]) * hw.r_unit
    return Plan(
        strategy=strategy,
        gpu_type=hw.gpu_type,
        gpus=gpus,
        cost_per_hour=len(gpus) * hw.price_per_hour,
        per_workload_r_inter=r_inter,
    )


def _check_unique_names(
    workloads: Sequence[tuple[WorkloadSpec, WorkloadCoefficients]],
) -> None:
    names = [s.name for s, _ in workloads]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise ValueError(f"duplicate workload names: {dup}")


def plan(
    workloads: Sequence[tuple[WorkloadSpec, WorkloadCoefficients]],
    hw: HardwareProfile,
    *,
    b_max: int = DEFAULT_BATCH_CAP,
    stats: PlanStats | None = None,
) -> Plan:
    """Provision devices for all workloads at minimal device count.

    Workloads are placed in descending order of their solo resource lower
    bound (names break ties).  Each is offered to every open device; the
    device whose joint reallocation needs the least extra resources wins
    (lowest index on ties), and a fresh device opens only when no open one
    can absorb the workload.
    """
    _check_unique_names(workloads)
    specs = {s.name: s for s, _ in workloads}
    coefs = {s.name: c for s, c in workloads}
    hw_cap = max_units(hw)

    batches: dict[str, int] = {}
    lb_units: dict[str, int] = {}
    for spec, coef in workloads:
        batches[spec.name] = appropriate_batch(spec, hw, b_max)
        lb_units[spec.name] = _lower_bound_units(spec, coef, hw, batches[spec.name])

    order = sorted(specs, key=lambda n: (-lb_units[n], n))

    gpu_names: list[list[str]] = []
    gpu_entries: list[list[_Entry]] = []
    gpu_units: list[list[int]] = []

    for name in order:
        entry = _Entry(specs[name], coefs[name], batches[name], hw)
        need = lb_units[name]
        best_j = -1
        best_inter = hw_cap  # strict improvement required
        best_units: list[int] | None = None
        for j in range(len(gpu_names)):
            occupied = sum(gpu_units[j])
            if occupied + need > hw_cap:
                continue
            if stats is not None:
                stats.candidate_gpus += 1
            cand_units = _alloc_units(
                gpu_entries[j] + [entry], gpu_units[j] + [need], hw, hw_cap, stats
            )
            total = sum(cand_units)
            if total <= hw_cap:
                inter = total - occupied
                if inter < best_inter:
                    best_j = j
                    best_inter = inter
                    best_units = cand_units
        if best_j < 0:
            gpu_names.append([name])
            gpu_entries.append([entry])
            gpu_units.append([need])
        else:
            gpu_names[best_j].append(name)
            gpu_entries[best_j].append(entry)
            gpu_units[best_j] = list(best_units)

    placement = [
        (names, units, [batches[n] for n in names])
        for names, units in zip(gpu_names, gpu_units)
    ]
    return _build_plan("igniter", hw, placement, specs, coefs, lb_units)


def plan_cost(p: Plan, hw: HardwareProfile) -> float:
    """Hourly cost of a plan: device count times unit price."""
    return len(p.gpus) * hw.price_per_hour


def select_gpu_type(
    workloads: Sequence[WorkloadSpec],
    profiles: Sequence[HardwareProfile],
    coefs_by_type: Mapping[str, Mapping[str, WorkloadCoefficients]],
    *,
    b_max: int = DEFAULT_BATCH_CAP,
) -> Plan:
    """Plan on every GPU type and keep the cheapest (first profile on ties).

    Types on which any workload is infeasible are skipped; if that leaves
    none, the error for the last skipped type propagates in the message.
    """
    best: Plan | None = None
    last_error: Exception | None = None
    for hw in profiles:
        try:
            coefs = coefs_by_type[hw.gpu_type]
            candidate = plan(
                [(s, coefs[s.name]) for s in workloads], hw, b_max=b_max
            )
        except KeyError as exc:
            raise ValueError(
                f"missing coefficients for GPU type {hw.gpu_type}: {exc}"
            ) from exc
        except (InfeasibleSloError, InfeasibleResourceError, BatchCapExceededError) as exc:
            last_error = exc
            continue
        if best is None or candidate.cost_per_hour < best.cost_per_hour:
            best = candidate
    if best is None:
        raise InfeasibleError(f"no GPU type can host all workloads ({last_error})")
    return best
