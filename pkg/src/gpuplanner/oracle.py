"""Exhaustive reference planner for tiny instances.

Enumerates every partition of the workloads onto devices and every
grid allocation inside each device, keeping the lexicographically
minimal feasible plan by (device count, total allocated fraction,
canonical allocation order).  Intended to bound the greedy planner's
optimality gap, not to scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .errors import BudgetExceededError, InfeasibleError
from .model import (
    HardwareProfile,
    WorkloadCoefficients,
    WorkloadSpec,
    _Entry,
    _eval_entries,
)
from .planner import (
    DEFAULT_BATCH_CAP,
    Plan,
    _build_plan,
    _check_unique_names,
    _lower_bound_units,
    appropriate_batch,
    max_units,
)

_T_INF = 6
_THROUGHPUT = 7


@dataclass(frozen=True)
class OracleBudget:
    """Enumeration limits; the grid defaults to every allocation unit."""

    max_workloads: int = 4
    max_gpus: int = 3
    max_candidates: int = 100_000_000
    r_grid_units: tuple[int, ...] | None = None


class _Search:
    def __init__(
        self,
        specs: Mapping[str, WorkloadSpec],
        entries: Mapping[str, _Entry],
        hw: HardwareProfile,
        budget: OracleBudget,
    ):
        self.specs = specs
        self.entries = entries
        self.hw = hw
        self.budget = budget
        self.cap = max_units(hw)
        self.grid = tuple(sorted(budget.r_grid_units or range(1, self.cap + 1)))
        self.evaluated = 0
        self._group_cache: dict[frozenset[str], tuple[int, tuple[int, ...]] | None] = {}

    def _feasible(self, entries: Sequence[_Entry], units: Sequence[int]) -> bool:
        self.evaluated += 1
        if self.evaluated > self.budget.max_candidates:
            raise BudgetExceededError(
                f"exceeded {self.budget.max_candidates} candidate evaluations"
            )
        rs = [u * self.hw.r_unit for u in units]
        rows = _eval_entries(entries, rs, self.hw)
        for entry, row in zip(entries, rows):
            if row[_T_INF] > entry.t_half or row[_THROUGHPUT] < entry.rate_rps:
                return False
        return True

    def best_group_alloc(
        self, group: Sequence[str]
    ) -> tuple[int, tuple[int, ...]] | None:
        """Minimal feasible allocation for one device, or None.

        Returns (total units, per-workload units in name order); ties on
        the total break on the unit vector itself.
        """
        key = frozenset(group)
        if key in self._group_cache:
            return self._group_cache[key]
        names = sorted(group)
        entries = [self.entries[n] for n in names]
        best: tuple[int, tuple[int, ...]] | None = None
        units = [0] * len(names)

        def recurse(i: int, used: int) -> None:
            nonlocal best
            if i == len(names):
                candidate = (used, tuple(units))
                if (best is None or candidate < best) and self._feasible(
                    entries, units
                ):
                    best = candidate
                return
            # Any completion adds at least one unit per remaining workload.
            if best is not None and used + (len(names) - i) > best[0]:
                return
            for u in self.grid:
                if used + u > self.cap:
                    break
                units[i] = u
                recurse(i + 1, used + u)
            units[i] = 0

        recurse(0, 0)
        self._group_cache[key] = best
        return best


def _partitions(items: Sequence[str], max_blocks: int) -> Iterator[list[list[str]]]:
    """All set partitions of items into at most max_blocks blocks."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partial in _partitions(rest, max_blocks):
        for i in range(len(partial)):
            yield partial[:i] + [[first] + partial[i]] + partial[i + 1:]
        if len(partial) < max_blocks:
            yield partial + [[first]]


def exhaustive_plan(
    workloads: Sequence[tuple[WorkloadSpec, WorkloadCoefficients]],
    hw: HardwareProfile,
    *,
    budget: OracleBudget | None = None,
    b_max: int = DEFAULT_BATCH_CAP,
) -> Plan:
    """Optimal plan by full enumeration; raises InfeasibleError when none exists.

    Batch sizes are fixed at the rate-matching batch: a larger batch only
    needs more resources and a smaller one cannot sustain the arrival rate,
    so it is the unique non-dominated choice.
    """
    budget = budget or OracleBudget()
    _check_unique_names(workloads)
    if len(workloads) > budget.max_workloads:
        raise BudgetExceededError(
            f"oracle accepts at most {budget.max_workloads} workloads, "
            f"got {len(workloads)}"
        )
    specs = {s.name: s for s, _ in workloads}
    coefs = {s.name: c for s, c in workloads}

    batches = {
        s.name: appropriate_batch(s, hw, b_max) for s, _ in workloads
    }
    lb_units = {
        s.name: _lower_bound_units(s, c, hw, batches[s.name]) for s, c in workloads
    }
    entries = {
        s.name: _Entry(s, c, batches[s.name], hw) for s, c in workloads
    }
    search = _Search(specs, entries, hw, budget)

    names = sorted(specs)
    best_key: tuple | None = None
    best_blocks: list[tuple[tuple[str, int], ...]] | None = None
    for partition in _partitions(names, budget.max_gpus):
        total = 0
        blocks: list[tuple[tuple[str, int], ...]] = []
        feasible = True
        for block in partition:
            result = search.best_group_alloc(block)
            if result is None:
                feasible = False
                break
            block_total, block_units = result
            total += block_total
            blocks.append(tuple(zip(sorted(block), block_units)))
        if not feasible:
            continue
        signature = tuple(sorted(blocks))
        key = (len(partition), total, signature)
        if best_key is None or key < best_key:
            best_key = key
            best_blocks = sorted(blocks)

    if best_blocks is None:
        raise InfeasibleError(
            f"no feasible plan within {budget.max_gpus} devices"
        )

    placement = [
        (
            [name for name, _ in block],
            [units for _, units in block],
            [batches[name] for name, _ in block],
        )
        for block in best_blocks
    ]
    plan = _build_plan("oracle", hw, placement, specs, coefs, lb_units)
    return plan
