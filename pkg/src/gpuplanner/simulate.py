"""Deterministic request-level replay of a plan against full SLOs.

Each workload is served by one process: requests queue until a full batch
is waiting and the server is idle, then the whole batch runs for the
model-predicted inference latency of that device's co-location state.
End-to-end latency therefore covers batch formation, queueing, and
execution, which is what the full (not halved) SLO is judged against.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import UnstableQueueError
from .model import (
    HardwareProfile,
    WorkloadCoefficients,
    WorkloadSpec,
    predict_gpu,
)
from .planner import Plan

# A queue this much deeper than one batch at the horizon end signals an
# unsustainable offered rate.
UNSTABLE_QUEUE_FACTOR = 10


@dataclass(frozen=True)
class SimConfig:
    duration_ms: float
    warmup_ms: float = 0.0
    arrival: str = "constant"  # "constant" or "poisson"
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.warmup_ms <= self.duration_ms:
            raise ValueError("requires duration_ms >= warmup_ms >= 0")
        if self.arrival not in ("constant", "poisson"):
            raise ValueError(f"unknown arrival process: {self.arrival}")


@dataclass(frozen=True)
class RequestRecord:
    workload: str
    arrival_ms: float
    dispatch_ms: float
    complete_ms: float


@dataclass(frozen=True)
class WorkloadReport:
    workload: str
    offered_rps: float
    achieved_rps: float
    p50_ms: float
    p99_ms: float
    max_queue_depth: int
    completed: int
    violation: bool  # p99 beyond the full latency SLO


@dataclass(frozen=True)
class SimReport:
    duration_ms: float
    warmup_ms: float
    workloads: list[WorkloadReport]

    @property
    def violations(self) -> list[str]:
        return [w.workload for w in self.workloads if w.violation]


def _arrival_times(rate_rps: float, cfg: SimConfig, seed_offset: int) -> list[float]:
    out = []
    if cfg.arrival == "constant":
        spacing = 1000.0 / rate_rps
        t = 0.0
        k = 0
        while t < cfg.duration_ms:
            out.append(t)
            k += 1
            t = k * spacing
    else:
        rng = random.Random((cfg.seed, seed_offset))
        rate_per_ms = rate_rps / 1000.0
        t = rng.expovariate(rate_per_ms)
        while t < cfg.duration_ms:
            out.append(t)
            t += rng.expovariate(rate_per_ms)
    return out


def _run_workload(
    name: str,
    arrivals: list[float],
    batch: int,
    service_ms: float,
    horizon_ms: float,
) -> tuple[list[RequestRecord], int, int]:
    """Replay one workload; returns (records, max_queue_depth, backlog_at_end).

    The backlog counts requests not dispatched by the horizon end:
    leftover partial batches plus batches whose start slipped past the
    horizon because the server was still busy.
    """
    records: list[RequestRecord] = []
    queue: deque[float] = deque()
    # Batches formed but starting in the future, as (start, size).
    pending: deque[tuple[float, int]] = deque()
    server_free = 0.0
    max_depth = 0

    for t in arrivals:
        queue.append(t)
        while len(queue) >= batch:
            members = [queue.popleft() for _ in range(batch)]
            start = max(members[-1], server_free)
            done = start + service_ms
            for arrival in members:
                records.append(RequestRecord(name, arrival, start, done))
            pending.append((start, batch))
            server_free = done
        while pending and pending[0][0] <= t:
            pending.popleft()
        waiting = len(queue) + sum(size for _, size in pending)
        max_depth = max(max_depth, waiting)

    backlog = len(queue) + sum(
        size for start, size in pending if start > horizon_ms
    )
    return records, max_depth, backlog


def simulate(
    plan: Plan,
    specs: Mapping[str, WorkloadSpec],
    coefs: Mapping[str, WorkloadCoefficients],
    hw: HardwareProfile,
    cfg: SimConfig,
    *,
    collect_trace: bool = False,
) -> SimReport | tuple[SimReport, list[RequestRecord]]:
    """Replay every workload of a plan; interference state is frozen at plan time."""
    reports: list[WorkloadReport] = []
    trace: list[RequestRecord] = []

    items: list[tuple[str, int, float]] = []  # (name, batch, service t_inf)
    for gpu in plan.gpus:
        predicted = predict_gpu(gpu.allocations, specs, coefs, hw)
        for alloc in gpu.allocations:
            items.append((alloc.workload, alloc.batch, predicted[alloc.workload].t_inf_ms))
    items.sort()

    for index, (name, batch, service_ms) in enumerate(items):
        spec = specs[name]
        arrivals = _arrival_times(spec.rate_rps, cfg, index)
        records, max_depth, backlog = _run_workload(
            name, arrivals, batch, service_ms, cfg.duration_ms
        )
        if backlog > UNSTABLE_QUEUE_FACTOR * batch:
            raise UnstableQueueError(name, backlog, UNSTABLE_QUEUE_FACTOR * batch)

        measured = [
            r.complete_ms - r.arrival_ms
            for r in records
            if r.arrival_ms >= cfg.warmup_ms
        ]
        window_ms = cfg.duration_ms - cfg.warmup_ms
        if measured:
            p50 = float(np.percentile(measured, 50))
            p99 = float(np.percentile(measured, 99))
        else:
            p50 = p99 = 0.0
        achieved = len(measured) / window_ms * 1000.0 if window_ms > 0 else 0.0
        reports.append(
            WorkloadReport(
                workload=name,
                offered_rps=spec.rate_rps,
                achieved_rps=achieved,
                p50_ms=p50,
                p99_ms=p99,
                max_queue_depth=max_depth,
                completed=len(measured),
                violation=bool(measured) and p99 > spec.slo_ms,
            )
        )
        if collect_trace:
            trace.extend(records)

    report = SimReport(cfg.duration_ms, cfg.warmup_ms, reports)
    if collect_trace:
        return report, trace
    return report


def write_trace_csv(path, trace: list[RequestRecord]) -> None:
    """Per-request trace: workload,arrival_ms,dispatch_ms,complete_ms."""
    with open(path, "w") as handle:
        handle.write("workload,arrival_ms,dispatch_ms,complete_ms\n")
        for r in trace:
            handle.write(
                f"{r.workload},{r.arrival_ms!r},{r.dispatch_ms!r},{r.complete_ms!r}\n"
            )
