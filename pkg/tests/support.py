"""Shared fixtures: reference hardware, demo workload, random instance factory."""

from __future__ import annotations

import numpy as np

from gpuplanner import (
    HardwareProfile,
    WorkloadCoefficients,
    WorkloadSpec,
    appropriate_batch,
    lower_bound_resources,
)
from gpuplanner.errors import PlanningError

V100_KWARGS = dict(
    gpu_type="v100",
    power_max_w=300.0,
    freq_max_mhz=1530.0,
    power_idle_w=53.5,
    pcie_bw_mb_per_ms=10.0,
    alpha_f=-1.025,
    alpha_sch_ms=0.00475,
    beta_sch_ms=-0.00902,
    r_unit=0.025,
    price_per_hour=3.06,
)


def make_v100(**overrides) -> HardwareProfile:
    kwargs = dict(V100_KWARGS)
    kwargs.update(overrides)
    return HardwareProfile(**kwargs)


def demo_spec(name="resnet", slo_ms=40.0, rate_rps=400.0) -> WorkloadSpec:
    return WorkloadSpec(name, slo_ms, rate_rps, 0.574, 0.004)


def demo_coef(**overrides) -> WorkloadCoefficients:
    kwargs = dict(
        n_kernels=100,
        k_sch_ms=0.002,
        k1=0.001,
        k2=0.05,
        k3=0.5,
        k4=0.05,
        k5=0.2,
        alpha_power_w=50.0,
        beta_power_w=60.0,
        alpha_cacheutil=0.05,
        beta_cacheutil=0.10,
        alpha_cache=0.25,
    )
    kwargs.update(overrides)
    return WorkloadCoefficients(**kwargs)


def random_coefficients(rng: np.random.Generator) -> WorkloadCoefficients:
    return WorkloadCoefficients(
        n_kernels=int(rng.integers(20, 301)),
        k_sch_ms=float(rng.uniform(0.0005, 0.004)),
        k1=float(rng.uniform(0.0, 0.01)),
        k2=float(rng.uniform(0.01, 0.1)),
        k3=float(rng.uniform(0.5, 10.0)),
        k4=float(rng.uniform(0.0, 0.2)),
        k5=float(rng.uniform(0.05, 0.5)),
        alpha_power_w=float(rng.uniform(10.0, 60.0)),
        beta_power_w=float(rng.uniform(20.0, 80.0)),
        alpha_cacheutil=float(rng.uniform(0.01, 0.08)),
        beta_cacheutil=float(rng.uniform(0.02, 0.15)),
        alpha_cache=float(rng.uniform(0.0, 0.4)),
    )


def random_feasible_workload(
    rng: np.random.Generator, name: str, hw: HardwareProfile, *, max_tries=200
) -> tuple[WorkloadSpec, WorkloadCoefficients]:
    """Draw a workload that a device can host alone within its half-SLO."""
    for _ in range(max_tries):
        spec = WorkloadSpec(
            name=name,
            slo_ms=float(rng.uniform(20.0, 80.0)),
            rate_rps=float(rng.uniform(50.0, 500.0)),
            d_load_mb=float(rng.uniform(0.05, 1.0)),
            d_feedback_mb=float(rng.uniform(0.001, 0.05)),
        )
        coef = random_coefficients(rng)
        try:
            batch = appropriate_batch(spec, hw)
            lower_bound_resources(spec, coef, hw, batch)
        except PlanningError:
            continue
        return spec, coef
    raise RuntimeError("could not draw a feasible workload")


def random_instance(
    rng: np.random.Generator, count: int, hw: HardwareProfile
) -> list[tuple[WorkloadSpec, WorkloadCoefficients]]:
    return [
        random_feasible_workload(rng, f"w{i:04d}", hw) for i in range(count)
    ]


# Synthetic per-model coefficients for the 12-workload benchmark instance
# (three SLO tiers over four CNN families).
MODEL_COEFS = {
    "alexnet": dict(n_kernels=30, k_sch_ms=0.002, k1=0.0005, k2=0.02, k3=0.3,
                    k4=0.05, k5=0.1, alpha_power_w=30.0, beta_power_w=40.0,
                    alpha_cacheutil=0.02, beta_cacheutil=0.08, alpha_cache=0.1),
    "resnet50": dict(n_kernels=100, k_sch_ms=0.002, k1=0.001, k2=0.05, k3=0.5,
                     k4=0.05, k5=0.2, alpha_power_w=50.0, beta_power_w=60.0,
                     alpha_cacheutil=0.05, beta_cacheutil=0.10, alpha_cache=0.25),
    "vgg19": dict(n_kernels=60, k_sch_ms=0.0025, k1=0.004, k2=0.12, k3=1.2,
                  k4=0.06, k5=0.3, alpha_power_w=60.0, beta_power_w=70.0,
                  alpha_cacheutil=0.04, beta_cacheutil=0.12, alpha_cache=0.2),
    "ssd": dict(n_kernels=150, k_sch_ms=0.002, k1=0.003, k2=0.1, k3=1.5,
                k4=0.04, k5=0.4, alpha_power_w=55.0, beta_power_w=65.0,
                alpha_cacheutil=0.03, beta_cacheutil=0.10, alpha_cache=0.15),
}

MODEL_TRANSFERS = {
    "alexnet": (0.574, 0.004),
    "resnet50": (0.574, 0.004),
    "vgg19": (0.574, 0.004),
    "ssd": (1.08, 0.02),
}

APP_SLOS = {
    "app1": {"alexnet": (10.0, 1200.0), "resnet50": (20.0, 400.0),
             "vgg19": (20.0, 300.0), "ssd": (25.0, 150.0)},
    "app2": {"alexnet": (15.0, 400.0), "resnet50": (30.0, 600.0),
             "vgg19": (30.0, 400.0), "ssd": (40.0, 50.0)},
    "app3": {"alexnet": (20.0, 800.0), "resnet50": (40.0, 200.0),
             "vgg19": (40.0, 200.0), "ssd": (55.0, 300.0)},
}


def twelve_workload_instance() -> list[tuple[WorkloadSpec, WorkloadCoefficients]]:
    out = []
    for app, models in APP_SLOS.items():
        for model, (slo, rate) in models.items():
            d_load, d_feedback = MODEL_TRANSFERS[model]
            out.append(
                (
                    WorkloadSpec(f"{model}-{app}", slo, rate, d_load, d_feedback),
                    WorkloadCoefficients(**MODEL_COEFS[model]),
                )
            )
    return out
