"""Globally optimal power allocation for downlink multicarrier NOMA.

The package solves three problems on a set of NOMA clusters (one per
subchannel): minimum total power, maximum sum-rate and maximum energy
efficiency, all under per-user minimum rates, per-subchannel power masks
and a total power budget.
"""

from .cluster import (
    ClusterConstants,
    FeasibilityResult,
    admission_control,
    approx_intra_powers,
    cluster_constants,
    feasibility_check,
    intra_cluster_optimal,
    max_rate_allocation,
    min_power_allocation,
    sic_outage_zero,
)
from .energy import (
    BarrierProblem,
    DinkelbachState,
    barrier_inner,
    dinkelbach_solve,
    ee_objective_split,
    full_power_condition,
    subgradient_inner,
)
from .errors import (
    BracketFailure,
    BudgetOutOfRange,
    InfeasibleBox,
    InfeasibleError,
    LineSearchStall,
    MaxIterationsError,
    NomaError,
    ShapeMismatch,
)
from .kernels import BACKEND
from .model import (
    ClusterSpec,
    PowerAllocation,
    SolveReport,
    Status,
    SystemParams,
    cluster_rates,
    rate_bps,
    sinr,
    system_objectives,
)
from .sumrate import (
    VirtualOmaSystem,
    equal_power_optimality,
    maximize_sum_rate,
    mixed_fairness_solve,
    to_virtual_oma,
    waterfill,
)
from .units import db_to_linear, dbm_to_watts, noise_power_w

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
