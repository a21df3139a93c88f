"""Least-squares recovery of model coefficients from profiling samples.

The active-time surface is linear in (k1, k2, k3, k5) once k4 is fixed,
so k4 is found by a deterministic coarse grid over [0, 2] refined with
golden-section search, with an ordinary least-squares solve inside.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateDesignError,
    InsufficientDataError,
    ProblemFormatError,
    ZeroVarianceError,
)

K4_SEARCH_RANGE = (0.0, 2.0)
K4_COARSE_POINTS = 2001
K4_TOLERANCE = 1e-6

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

SOLO_CSV_COLUMNS = ("r", "batch", "k_act_ms", "power_w", "cache_util")
COLO_CSV_COLUMNS = (
    "n_colocated",
    "per_kernel_delay_ms",
    "co_cache_sum",
    "act_inflation",
    "total_power_w",
    "freq_mhz",
)


@dataclass(frozen=True)
class SoloSample:
    """One profiling measurement of a workload running alone."""

    r: float
    batch: int
    k_act_ms: float
    power_w: float
    cache_util: float

    def __post_init__(self):
        if not 0 < self.r <= 1.0:
            raise ValueError(f"r must be in (0, 1], got {self.r}")
        if self.batch < 1:
            raise ValueError(f"batch must be >= 1, got {self.batch}")
        if self.k_act_ms <= 0 or self.power_w <= 0 or self.cache_util <= 0:
            raise ValueError("measurements must be positive")


@dataclass(frozen=True)
class ColoSample:
    """One profiling measurement of a workload under co-location."""

    n_colocated: int
    per_kernel_delay_ms: float
    co_cache_sum: float
    act_inflation: float
    total_power_w: float
    freq_mhz: float

    def __post_init__(self):
        if self.n_colocated < 2:
            raise ValueError(f"n_colocated must be >= 2, got {self.n_colocated}")
        if self.act_inflation < 0:
            raise ValueError("act_inflation must be >= 0")


@dataclass(frozen=True)
class ActiveTimeFit:
    k1: float
    k2: float
    k3: float
    k4: float
    k5: float
    rms_error: float


@dataclass(frozen=True)
class PowerCacheFit:
    alpha_power_w: float
    beta_power_w: float
    alpha_cacheutil: float
    beta_cacheutil: float


@dataclass(frozen=True)
class InterferenceFit:
    """Interference coefficients; each is None when its data was missing."""

    alpha_sch_ms: float | None
    beta_sch_ms: float | None
    alpha_cache: float | None
    alpha_f: float | None
    errors: dict[str, str] = field(default_factory=dict)


def default_profile_grid() -> list[tuple[float, int]]:
    """The 11 (r, batch) profiling configurations: an r sweep and a batch sweep."""
    grid = [(r, 8) for r in (0.2, 0.4, 0.6, 0.8, 1.0)]
    grid += [(0.5, b) for b in (1, 2, 4, 8, 16, 32)]
    return grid


def _active_time_sse(
    samples: Sequence[SoloSample], k4: float
) -> tuple[float, np.ndarray]:
    """Sum of squared residuals at a fixed k4, with the inner linear solve."""
    denom = np.array([s.r + k4 for s in samples])
    b = np.array([float(s.batch) for s in samples])
    y = np.array([s.k_act_ms for s in samples])
    design = np.column_stack([b * b / denom, b / denom, 1.0 / denom, np.ones_like(b)])
    coeffs, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 4:
        raise DegenerateDesignError(
            "active-time design matrix is rank-deficient; vary r and batch more"
        )
    residual = design @ coeffs - y
    return float(residual @ residual), coeffs


def fit_active_time(samples: Sequence[SoloSample]) -> ActiveTimeFit:
    """Recover (k1..k5) from solo samples by hybrid search over k4."""
    if len(samples) < 6:
        raise InsufficientDataError(
            f"need at least 6 solo samples, got {len(samples)}"
        )
    if len({s.r for s in samples}) < 2 or len({s.batch for s in samples}) < 3:
        raise InsufficientDataError(
            "need samples spanning >= 2 resource fractions and >= 3 batch sizes"
        )

    lo, hi = K4_SEARCH_RANGE
    grid = np.linspace(lo, hi, K4_COARSE_POINTS)
    sse = np.array([_active_time_sse(samples, k4)[0] for k4 in grid])
    best = int(np.argmin(sse))

    # Golden-section refinement inside the bracketing grid cells.
    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, len(grid) - 1)]
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    f_c = _active_time_sse(samples, c)[0]
    f_d = _active_time_sse(samples, d)[0]
    while (b - a) > K4_TOLERANCE:
        if f_c < f_d:
            b, d, f_d = d, c, f_c
            c = b - _GOLDEN * (b - a)
            f_c = _active_time_sse(samples, c)[0]
        else:
            a, c, f_c = c, d, f_d
            d = a + _GOLDEN * (b - a)
            f_d = _active_time_sse(samples, d)[0]
    k4 = (a + b) / 2.0
    final_sse, coeffs = _active_time_sse(samples, k4)
    k1, k2, k3, k5 = (float(v) for v in coeffs)
    return ActiveTimeFit(k1, k2, k3, float(k4), k5,
                         math.sqrt(final_sse / len(samples)))


def _ols_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and intercept of y against x."""
    if float(np.ptp(x)) == 0.0:
        raise ZeroVarianceError("all regressor values are identical")
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def fit_power_cache(samples: Sequence[SoloSample]) -> PowerCacheFit:
    """Fit power and cache utilization against processing ability batch/k_act."""
    if len(samples) < 5:
        raise InsufficientDataError(
            f"need at least 5 solo samples, got {len(samples)}"
        )
    x = np.array([s.batch / s.k_act_ms for s in samples])
    ap, bp = _ols_line(x, np.array([s.power_w for s in samples]))
    ac, bc = _ols_line(x, np.array([s.cache_util for s in samples]))
    return PowerCacheFit(ap, bp, ac, bc)


def fit_interference(
    samples: Sequence[ColoSample],
    solo_k_sch_ms: float,
    power_max_w: float,
    freq_max_mhz: float,
) -> InterferenceFit:
    """Fit the co-location coefficients; partial results are allowed.

    Scheduling delay regresses the per-kernel excess over the solo delay
    against the co-location count.  Cache inflation and frequency decay are
    through-origin fits, matching their functional forms.
    """
    errors: dict[str, str] = {}

    alpha_sch = beta_sch = None
    ns = np.array([float(s.n_colocated) for s in samples])
    if len(set(ns.tolist())) >= 2:
        excess = np.array([s.per_kernel_delay_ms - solo_k_sch_ms for s in samples])
        alpha_sch, beta_sch = _ols_line(ns, excess)
    else:
        errors["alpha_sch"] = "need >= 2 distinct co-location counts"
        errors["beta_sch"] = errors["alpha_sch"]

    alpha_cache = None
    xs = np.array([s.co_cache_sum for s in samples])
    if len(set(xs.tolist())) >= 2:
        ys = np.array([s.act_inflation - 1.0 for s in samples])
        denom = float(xs @ xs)
        if denom > 0:
            alpha_cache = float(xs @ ys) / denom
        else:
            errors["alpha_cache"] = "all co-runner cache sums are zero"
    else:
        errors["alpha_cache"] = "need >= 2 distinct co-runner cache sums"

    alpha_f = None
    over = [s for s in samples if s.total_power_w > power_max_w]
    if len(over) >= 2:
        dp = np.array([s.total_power_w - power_max_w for s in over])
        df = np.array([s.freq_mhz - freq_max_mhz for s in over])
        alpha_f = float(dp @ df) / float(dp @ dp)
    else:
        errors["alpha_f"] = (
            f"need >= 2 samples above the {power_max_w} W cap, got {len(over)}"
        )

    return InterferenceFit(alpha_sch, beta_sch, alpha_cache, alpha_f, errors)


def _read_csv(path: Path, columns: tuple[str, ...]) -> list[dict[str, str]]:
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [c for c in columns if c not in header]
        if missing:
            raise ProblemFormatError(
                f"{path}: missing column(s) {', '.join(missing)}"
            )
        return list(reader)


def read_solo_samples(path: str | Path) -> list[SoloSample]:
    """Parse a solo-sample CSV (header r,batch,k_act_ms,power_w,cache_util)."""
    rows = _read_csv(Path(path), SOLO_CSV_COLUMNS)
    try:
        return [
            SoloSample(
                r=float(row["r"]),
                batch=int(row["batch"]),
                k_act_ms=float(row["k_act_ms"]),
                power_w=float(row["power_w"]),
                cache_util=float(row["cache_util"]),
            )
            for row in rows
        ]
    except (ValueError, TypeError) as exc:
        raise ProblemFormatError(f"{path}: {exc}") from exc


def read_colo_samples(path: str | Path) -> list[ColoSample]:
    """Parse a co-location-sample CSV."""
    rows = _read_csv(Path(path), COLO_CSV_COLUMNS)
    try:
        return [
            ColoSample(
                n_colocated=int(row["n_colocated"]),
                per_kernel_delay_ms=float(row["per_kernel_delay_ms"]),
                co_cache_sum=float(row["co_cache_sum"]),
                act_inflation=float(row["act_inflation"]),
                total_power_w=float(row["total_power_w"]),
                freq_mhz=float(row["freq_mhz"]),
            )
            for row in rows
        ]
    except (ValueError, TypeError) as exc:
        raise ProblemFormatError(f"{path}: {exc}") from exc
