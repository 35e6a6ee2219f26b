"""Exact analysis of finitely supported distributional exchange economies."""

from .agents import (
    OPT_OUT,
    Coalition,
    IndivisibilityError,
    Interval,
    IntervalAgentSpace,
    StepAllocation,
    purify,
    realize_blocking,
    realize_economy,
    represent_subpopulation,
    restricted_distribution,
    step_from_reallocation,
)
from .blocking import (
    BlockingWitness,
    CoreCoupling,
    CoreVerdict,
    blocking_search,
    blocks_by,
    core_coupling,
    find_blocking,
    is_core_reallocation,
)
from .dominance import (
    JointAllocationMeasure,
    dominates_D,
    find_pareto_improvement,
    pareto_compare_joint,
    strassen_coupling,
)
from .economy import (
    DistributionalAllocation,
    DistributionalEconomy,
    PreconditionError,
    Reallocation,
    SubMeasure,
    TypeProfile,
    aggregate_endowment,
    autarky,
    validate_allocation,
    validate_economy,
)
from .grids import default_blocking_grid, pareto_grid, refine_grid
from .optim import LinearProgram, ResourceLimitError, lp_solve, max_flow
from .prefs import CES, CobbDouglas, ExplicitStrict, Leontief, Linear, better_set, check_axioms, strictly_prefers, weakly_prefers
from .walras import demand, find_equilibrium, is_walrasian

__version__ = "0.1.0"
