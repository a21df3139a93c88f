"""Static provisioning baselines: interference-unaware FFD and a
throughput-maximizing best-fit with coarse allocation choices.

Both attach interference-aware model predictions to their plans, so
expected violations are visible in the output rather than silently fixed.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from .model import (
    Allocation,
    HardwareProfile,
    WorkloadCoefficients,
    WorkloadSpec,
    predict_gpu,
)
from .planner import (
    DEFAULT_BATCH_CAP,
    Plan,
    _build_plan,
    _check_unique_names,
    _lower_bound_units,
    appropriate_batch,
    max_units,
    violation_diagnostics,
)

# Allocation choices offered by the coarse best-fit strategy.
BESTFIT_CHOICES = (0.2, 0.4, 0.5, 0.6, 0.8)
BESTFIT_GAIN_THRESHOLD = 0.10
BESTFIT_MAX_PER_GPU = 2


def ffd_plus(
    workloads: Sequence[tuple[WorkloadSpec, WorkloadCoefficients]],
    hw: HardwareProfile,
    *,
    b_max: int = DEFAULT_BATCH_CAP,
) -> Plan:
    """First-Fit Decreasing at exactly the solo lower bound; no adjustment."""
    _check_unique_names(workloads)
    specs = {s.name: s for s, _ in workloads}
    coefs = {s.name: c for s, c in workloads}
    cap = max_units(hw)

    batches: dict[str, int] = {}
    lb_units: dict[str, int] = {}
    for spec, coef in workloads:
        batches[spec.name] = appropriate_batch(spec, hw, b_max)
        lb_units[spec.name] = _lower_bound_units(spec, coef, hw, batches[spec.name])

    order = sorted(specs, key=lambda n: (-lb_units[n], n))
    gpu_names: list[list[str]] = []
    gpu_units: list[list[int]] = []
    for name in order:
        need = lb_units[name]
        for j in range(len(gpu_names)):
            if sum(gpu_units[j]) + need <= cap:
                gpu_names[j].append(name)
                gpu_units[j].append(need)
                break
        else:
            gpu_names.append([name])
            gpu_units.append([need])

    placement = [
        (names, units, [batches[n] for n in names])
        for names, units in zip(gpu_names, gpu_units)
    ]
    plan = _build_plan("ffd", hw, placement, specs, coefs, lb_units)
    plan.diagnostics = violation_diagnostics(plan.gpus, specs)
    return plan


def most_efficient_fraction(
    spec: WorkloadSpec,
    coef: WorkloadCoefficients,
    hw: HardwareProfile,
    batch: int,
    *,
    choices: Sequence[float] = BESTFIT_CHOICES,
    gain_threshold: float = BESTFIT_GAIN_THRESHOLD,
) -> float:
    """Smallest allocation choice past the knee of the solo throughput curve.

    Walk the choices upward and stop once the next step would add less than
    ``gain_threshold`` relative throughput.
    """
    coefs = {spec.name: coef}
    specs = {spec.name: spec}

    def throughput(r: float) -> float:
        pred = predict_gpu([Allocation(spec.name, r, batch)], specs, coefs, hw)
        return pred[spec.name].throughput_rps

    for i, r in enumerate(choices[:-1]):
        gain = (throughput(choices[i + 1]) - throughput(r)) / throughput(r)
        if gain < gain_threshold:
            return r
    return choices[-1]


def bestfit_throughput(
    workloads: Sequence[tuple[WorkloadSpec, WorkloadCoefficients]],
    hw: HardwareProfile,
    *,
    b_max: int = DEFAULT_BATCH_CAP,
    gain_threshold: float = BESTFIT_GAIN_THRESHOLD,
) -> Plan:
    """Throughput-oriented sizing with best-fit placement, two residents max.

    Allocation comes from a five-value ladder; the batch still just meets
    the arrival rate.  The strategy itself ignores interference; the
    attached predictions do not.
    """
    _check_unique_names(workloads)
    specs = {s.name: s for s, _ in workloads}
    coefs = {s.name: c for s, c in workloads}
    cap = max_units(hw)

    batches: dict[str, int] = {}
    lb_units: dict[str, int] = {}
    chosen_units: dict[str, int] = {}
    for spec, coef in workloads:
        batch = appropriate_batch(spec, hw, b_max)
        batches[spec.name] = batch
        lb_units[spec.name] = _lower_bound_units(spec, coef, hw, batch)
        r = most_efficient_fraction(
            spec, coef, hw, batch, gain_threshold=gain_threshold
        )
        chosen_units[spec.name] = int(round(r / hw.r_unit))

    order = sorted(specs, key=lambda n: (-chosen_units[n], n))
    gpu_names: list[list[str]] = []
    gpu_units: list[list[int]] = []
    for name in order:
        need = chosen_units[name]
        best_j = -1
        best_remaining = cap + 1
        for j in range(len(gpu_names)):
            if len(gpu_names[j]) >= BESTFIT_MAX_PER_GPU:
                continue
            remaining = cap - sum(gpu_units[j])
            if need <= remaining < best_remaining:
                best_j = j
                best_remaining = remaining
        if best_j < 0:
            gpu_names.append([name])
            gpu_units.append([need])
        else:
            gpu_names[best_j].append(name)
            gpu_units[best_j].append(need)

    placement = [
        (names, units, [batches[n] for n in names])
        for names, units in zip(gpu_names, gpu_units)
    ]
    plan = _build_plan("bestfit", hw, placement, specs, coefs, lb_units)
    plan.diagnostics = violation_diagnostics(plan.gpus, specs)
    return plan
