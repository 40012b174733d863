"""parmodel: performance modeling of message-passing parallel programs.

Parse textual models of process topologies and per-role activity flows,
validate them, predict execution timelines with a deterministic cost
simulator, sweep scalability parameters, and export collaboration,
swimlane, and timed sequence views.
"""

from .analyze import (
    SweepReport,
    SweepRow,
    plot_report,
    render_report,
    sequential_baseline,
    speedup,
    sweep,
)
from .errors import (
    Diagnostic,
    EvalError,
    ParmodelError,
    SimulationError,
    TopologyError,
)
from .export import export_sequence, export_swimlane, export_topology_dot
from .ir import CostDecl, Model, eval_expr
from .model import (
    CostModel,
    ProcessGraph,
    TopologySpec,
    build_topology,
    neighbors,
    shortest_hops,
)
from .paradigms import (
    ParadigmSpec,
    gen_divide_conquer,
    gen_hybrid,
    gen_master_worker,
    gen_monte_carlo_pi,
    gen_pipeline,
    gen_spmd,
    generate,
)
from .parser import ParseResult, parse_model, print_model
from .resolve import ResolvedModel, resolve_model
from .simulate import (
    DeadlockReport,
    Event,
    RunMetrics,
    RunResult,
    Trace,
    detect_deadlock_state,
    run,
)
from .validate import (
    ValidationReport,
    check_communications,
    check_stereotypes,
    check_topology,
    validate_model,
)

__version__ = "0.1.0"

__all__ = [
    "CostDecl", "CostModel", "DeadlockReport", "Diagnostic", "EvalError",
    "Event", "Model", "ParadigmSpec", "ParmodelError", "ParseResult",
    "ProcessGraph", "ResolvedModel", "RunMetrics", "RunResult",
    "SimulationError", "SweepReport", "SweepRow", "TopologyError",
    "TopologySpec", "Trace", "ValidationReport", "build_topology",
    "check_communications", "check_stereotypes", "check_topology",
    "detect_deadlock_state", "eval_expr", "export_sequence",
    "export_swimlane", "export_topology_dot", "gen_divide_conquer",
    "gen_hybrid", "gen_master_worker", "gen_monte_carlo_pi", "gen_pipeline",
    "gen_spmd", "generate", "neighbors", "parse_model", "plot_report",
    "print_model", "render_report", "resolve_model", "run",
    "sequential_baseline", "shortest_hops", "speedup", "sweep",
    "validate_model",
]
