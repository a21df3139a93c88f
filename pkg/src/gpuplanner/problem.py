"""Problem-file ingestion and structured plan/report documents (JSON)."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from . import calibration
from .errors import ProblemFormatError
from .model import (
    Allocation,
    HardwareProfile,
    LatencyBreakdown,
    WorkloadCoefficients,
    WorkloadSpec,
    slo_check,
)
from .planner import Plan
from .simulate import SimReport

COEFFICIENT_KEYS = (
    "n_kernels",
    "k_sch_ms",
    "k1",
    "k2",
    "k3",
    "k4",
    "k5",
    "alpha_power_w",
    "beta_power_w",
    "alpha_cacheutil",
    "beta_cacheutil",
    "alpha_cache",
)

HARDWARE_KEYS = (
    "gpu_type",
    "power_max_w",
    "freq_max_mhz",
    "power_idle_w",
    "pcie_bw_mb_per_ms",
    "alpha_f",
    "alpha_sch_ms",
    "beta_sch_ms",
    "price_per_hour",
)

# Problem-level defaults, overridable per hardware entry or in "defaults".
DEFAULTS = {"r_unit": 0.025, "b_max": 32, "f_min_frac": 0.3}


@dataclass
class Problem:
    hardware: list[HardwareProfile]
    specs: list[WorkloadSpec]
    coefs_by_type: dict[str, dict[str, WorkloadCoefficients]]
    b_max: int = 32
    diagnostics: list[str] = field(default_factory=list)

    def spec_map(self) -> dict[str, WorkloadSpec]:
        return {s.name: s for s in self.specs}

    def profile(self, gpu_type: str) -> HardwareProfile:
        for hw in self.hardware:
            if hw.gpu_type == gpu_type:
                return hw
        known = ", ".join(h.gpu_type for h in self.hardware)
        raise ProblemFormatError(f"unknown gpu_type {gpu_type!r} (have: {known})")

    def workload_pairs(
        self, gpu_type: str
    ) -> list[tuple[WorkloadSpec, WorkloadCoefficients]]:
        coefs = self.coefs_by_type[gpu_type]
        return [(s, coefs[s.name]) for s in self.specs]


def _require(mapping: Mapping[str, Any], key: str, context: str) -> Any:
    if key not in mapping:
        raise ProblemFormatError(f"{context}: missing required field {key!r}")
    return mapping[key]


def coefficients_from_dict(
    raw: Mapping[str, Any], context: str
) -> WorkloadCoefficients:
    missing = [k for k in COEFFICIENT_KEYS if k not in raw]
    if missing:
        raise ProblemFormatError(
            f"{context}: missing coefficient(s) {', '.join(missing)}"
        )
    try:
        return WorkloadCoefficients(
            n_kernels=int(raw["n_kernels"]),
            k_sch_ms=float(raw["k_sch_ms"]),
            k1=float(raw["k1"]),
            k2=float(raw["k2"]),
            k3=float(raw["k3"]),
            k4=float(raw["k4"]),
            k5=float(raw["k5"]),
            alpha_power_w=float(raw["alpha_power_w"]),
            beta_power_w=float(raw["beta_power_w"]),
            alpha_cacheutil=float(raw["alpha_cacheutil"]),
            beta_cacheutil=float(raw["beta_cacheutil"]),
            alpha_cache=float(raw["alpha_cache"]),
        )
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"{context}: {exc}") from exc


def coefficients_to_dict(coef: WorkloadCoefficients) -> dict[str, Any]:
    return {key: getattr(coef, key) for key in COEFFICIENT_KEYS}


def _hardware_from_dict(
    raw: Mapping[str, Any], defaults: Mapping[str, Any], context: str
) -> HardwareProfile:
    for key in HARDWARE_KEYS:
        _require(raw, key, context)
    try:
        return HardwareProfile(
            gpu_type=str(raw["gpu_type"]),
            power_max_w=float(raw["power_max_w"]),
            freq_max_mhz=float(raw["freq_max_mhz"]),
            power_idle_w=float(raw["power_idle_w"]),
            pcie_bw_mb_per_ms=float(raw["pcie_bw_mb_per_ms"]),
            alpha_f=float(raw["alpha_f"]),
            alpha_sch_ms=float(raw["alpha_sch_ms"]),
            beta_sch_ms=float(raw["beta_sch_ms"]),
            r_unit=float(raw.get("r_unit", defaults["r_unit"])),
            r_max=float(raw.get("r_max", 1.0)),
            price_per_hour=float(raw["price_per_hour"]),
            f_min_frac=float(raw.get("f_min_frac", defaults["f_min_frac"])),
        )
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"{context}: {exc}") from exc


def _fit_from_samples(
    raw: Mapping[str, Any],
    base_dir: Path,
    hardware: Sequence[HardwareProfile],
    context: str,
    diagnostics: list[str],
) -> WorkloadCoefficients:
    solo_path = base_dir / _require(raw, "solo", context)
    if not solo_path.exists():
        raise ProblemFormatError(f"{context}: sample file not found: {solo_path}")
    n_kernels = int(_require(raw, "n_kernels", context))
    k_sch_ms = float(_require(raw, "k_sch_ms", context))

    solo = calibration.read_solo_samples(solo_path)
    active = calibration.fit_active_time(solo)
    power_cache = calibration.fit_power_cache(solo)

    alpha_cache = 0.0
    if "colo" in raw:
        colo_path = base_dir / raw["colo"]
        if not colo_path.exists():
            raise ProblemFormatError(f"{context}: sample file not found: {colo_path}")
        colo = calibration.read_colo_samples(colo_path)
        inter = calibration.fit_interference(
            colo, k_sch_ms, hardware[0].power_max_w, hardware[0].freq_max_mhz
        )
        if inter.alpha_cache is not None:
            alpha_cache = max(0.0, inter.alpha_cache)
        else:
            diagnostics.append(
                f"{context}: alpha_cache not identifiable "
                f"({inter.errors.get('alpha_cache')}); using 0"
            )
    else:
        diagnostics.append(f"{context}: no co-location samples; alpha_cache=0")

    return WorkloadCoefficients(
        n_kernels=n_kernels,
        k_sch_ms=k_sch_ms,
        k1=active.k1,
        k2=active.k2,
        k3=active.k3,
        k4=active.k4,
        k5=active.k5,
        alpha_power_w=power_cache.alpha_power_w,
        beta_power_w=power_cache.beta_power_w,
        alpha_cacheutil=power_cache.alpha_cacheutil,
        beta_cacheutil=power_cache.beta_cacheutil,
        alpha_cache=alpha_cache,
    )


def load_problem(path: str | Path) -> Problem:
    """Parse a problem file; resolves coefficient files and sample fits."""
    path = Path(path)
    base_dir = path.parent
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ProblemFormatError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProblemFormatError(f"{path}: top level must be an object")

    defaults = dict(DEFAULTS)
    defaults.update(doc.get("defaults", {}))

    raw_hardware = _require(doc, "hardware", str(path))
    if not raw_hardware:
        raise ProblemFormatError(f"{path}: hardware list is empty")
    hardware = [
        _hardware_from_dict(h, defaults, f"{path}: hardware[{i}]")
        for i, h in enumerate(raw_hardware)
    ]
    types = [h.gpu_type for h in hardware]
    if len(set(types)) != len(types):
        raise ProblemFormatError(f"{path}: duplicate gpu_type entries")

    diagnostics: list[str] = []
    specs: list[WorkloadSpec] = []
    coefs_by_type: dict[str, dict[str, WorkloadCoefficients]] = {
        t: {} for t in types
    }
    raw_workloads = _require(doc, "workloads", str(path))
    if not raw_workloads:
        raise ProblemFormatError(f"{path}: workload list is empty")
    for i, raw in enumerate(raw_workloads):
        context = f"{path}: workloads[{i}]"
        name = str(_require(raw, "name", context))
        try:
            spec = WorkloadSpec(
                name=name,
                slo_ms=float(_require(raw, "slo_ms", context)),
                rate_rps=float(_require(raw, "rate_rps", context)),
                d_load_mb=float(_require(raw, "d_load_mb", context)),
                d_feedback_mb=float(_require(raw, "d_feedback_mb", context)),
            )
        except (TypeError, ValueError) as exc:
            raise ProblemFormatError(f"{context}: {exc}") from exc
        specs.append(spec)

        if "coefficients_by_gpu_type" in raw:
            per_type = raw["coefficients_by_gpu_type"]
            for t in types:
                if t not in per_type:
                    raise ProblemFormatError(
                        f"{context}: no coefficients for gpu_type {t!r}"
                    )
                coefs_by_type[t][name] = coefficients_from_dict(
                    per_type[t], f"{context} ({t})"
                )
        else:
            if "coefficients" in raw:
                coef = coefficients_from_dict(raw["coefficients"], context)
            elif "coefficients_file" in raw:
                ref = base_dir / raw["coefficients_file"]
                if not ref.exists():
                    raise ProblemFormatError(
                        f"{context}: coefficients file not found: {ref}"
                    )
                inner = json.loads(ref.read_text())
                coef = coefficients_from_dict(
                    inner.get("coefficients", inner), str(ref)
                )
            elif "samples" in raw:
                coef = _fit_from_samples(
                    raw["samples"], base_dir, hardware, context, diagnostics
                )
            else:
                raise ProblemFormatError(
                    f"{context}: needs one of coefficients, "
                    f"coefficients_by_gpu_type, coefficients_file, samples"
                )
            for t in types:
                coefs_by_type[t][name] = coef

    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ProblemFormatError(f"{path}: duplicate workload names")

    return Problem(
        hardware=hardware,
        specs=specs,
        coefs_by_type=coefs_by_type,
        b_max=int(defaults["b_max"]),
        diagnostics=diagnostics,
    )


def _breakdown_to_dict(bd: LatencyBreakdown) -> dict[str, float]:
    return {
        "t_load_ms": bd.t_load_ms,
        "t_sch_ms": bd.t_sch_ms,
        "t_act_ms": bd.t_act_ms,
        "freq_mhz": bd.freq_mhz,
        "t_gpu_ms": bd.t_gpu_ms,
        "t_feedback_ms": bd.t_feedback_ms,
        "t_inf_ms": bd.t_inf_ms,
        "throughput_rps": bd.throughput_rps,
        "power_w": bd.power_w,
        "cache_util": bd.cache_util,
    }


def plan_to_document(
    plan: Plan, specs: Mapping[str, WorkloadSpec]
) -> dict[str, Any]:
    """Serialize a plan with predictions and per-workload SLO checks."""
    gpus = []
    for gpu in plan.gpus:
        allocations = []
        for alloc in gpu.allocations:
            bd = gpu.predicted[alloc.workload]
            check = slo_check(bd, specs[alloc.workload])
            allocations.append(
                {
                    "workload": alloc.workload,
                    "r": alloc.r,
                    "batch": alloc.batch,
                    "predicted": _breakdown_to_dict(bd),
                    "slo": {
                        "latency_ok": check.latency_ok,
                        "throughput_ok": check.throughput_ok,
                    },
                }
            )
        gpus.append(
            {
                "gpu_index": gpu.gpu_index,
                "fragment_r": gpu.fragment_r,
                "allocations": allocations,
            }
        )
    return {
        "strategy": plan.strategy,
        "gpu_type": plan.gpu_type,
        "cost_per_hour": plan.cost_per_hour,
        "gpus": gpus,
        "diagnostics": list(plan.diagnostics),
        "per_workload_r_inter": dict(sorted(plan.per_workload_r_inter.items())),
    }


def allocations_from_document(
    doc: Mapping[str, Any], context: str = "plan"
) -> list[list[Allocation]]:
    """Extract per-device allocations from a plan document, ignoring predictions."""
    gpus = _require(doc, "gpus", context)
    out = []
    for i, gpu in enumerate(gpus):
        allocs = []
        for raw in _require(gpu, "allocations", f"{context}: gpus[{i}]"):
            allocs.append(
                Allocation(
                    workload=str(_require(raw, "workload", context)),
                    r=float(_require(raw, "r", context)),
                    batch=int(_require(raw, "batch", context)),
                )
            )
        out.append(allocs)
    return out


def sim_report_to_document(report: SimReport) -> dict[str, Any]:
    return {
        "duration_ms": report.duration_ms,
        "warmup_ms": report.warmup_ms,
        "workloads": [
            {
                "workload": w.workload,
                "offered_rps": w.offered_rps,
                "achieved_rps": w.achieved_rps,
                "p50_ms": w.p50_ms,
                "p99_ms": w.p99_ms,
                "max_queue_depth": w.max_queue_depth,
                "completed": w.completed,
                "violation": w.violation,
            }
            for w in report.workloads
        ],
    }


def write_json_atomic(path: str | Path, doc: Mapping[str, Any]) -> None:
    """Write a JSON document via a temp file and rename, so readers never
    observe a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            json.dump(doc, handle, indent=2)
            handle.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
