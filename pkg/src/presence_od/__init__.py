"""Origin-destination flow estimation from aggregated presence counts."""

from .flow import FlowMatrix
from .polytope import (
    InfeasibleMarginals,
    Marginals,
    SinkSourceConfig,
    TraceMaxWitness,
    TwoLevelCost,
    augment_sink_source,
    check_feasible,
    detect_two_level,
    min_cost_flow_solve,
    northwest_corner_fill,
    solve_lp,
    trace_max_value,
    trace_max_witness,
)

__version__ = "0.1.0"
