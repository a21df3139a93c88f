"""Exception types shared across the package."""


class GpuPlannerError(Exception):
    """Base class for all errors raised by this package."""


class NonPositiveDenominatorError(GpuPlannerError):
    """Active-time denominator r + k4 is not positive; coefficients are corrupt."""


class OverAllocatedError(GpuPlannerError):
    """Total allocated resource fraction on a device exceeds the device maximum."""


class InsufficientDataError(GpuPlannerError):
    """Too few (or insufficiently varied) samples for a requested fit."""


class DegenerateDesignError(GpuPlannerError):
    """The regression design matrix is rank-deficient."""


class ZeroVarianceError(GpuPlannerError):
    """All regressor values coincide; a slope cannot be identified."""


class PlanningError(GpuPlannerError):
    """A workload cannot be provisioned; carries the workload name."""

    def __init__(self, workload: str, message: str):
        self.workload = workload
        super().__init__(f"{workload}: {message}")


class InfeasibleSloError(PlanningError):
    """The latency budget is too tight even with all device resources."""


class InfeasibleResourceError(PlanningError):
    """The resource lower bound exceeds the whole device."""


class BatchCapExceededError(PlanningError):
    """A single replica cannot absorb the arrival rate within the batch cap."""


class InfeasibleError(GpuPlannerError):
    """No candidate satisfies the constraints."""


class BudgetExceededError(GpuPlannerError):
    """Exhaustive enumeration exceeded its candidate budget."""


class UnstableQueueError(GpuPlannerError):
    """Simulated queue grew beyond bound; offered rate is not sustainable."""

    def __init__(self, workload: str, depth: int, bound: int):
        self.workload = workload
        self.depth = depth
        super().__init__(
            f"{workload}: queue depth {depth} exceeds {bound} at horizon end"
        )


class ProblemFormatError(GpuPlannerError):
    """A problem/plan/sample document does not match its schema."""
