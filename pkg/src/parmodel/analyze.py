"""Derived performance metrics and parameter sweeps.

Speedup is measured against the single-process degenerate model: one
rank executing every unit of compute the parallel model performs, with
all communication removed.  Sweeps rerun the simulator once per value;
rows are independent, deterministic, and sorted ascending.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import SimulationError
from .ir import (
    ActionNode,
    LoopNode,
    Model,
    Num,
    RoleDecl,
    SubactivityNode,
    TaskPoolNode,
    TopologyDecl,
    eval_count,
    eval_expr,
)
from .model import CostModel
from .paradigms import ParadigmSpec, generate
from .resolve import resolve_model
from .simulate import DeadlockReport, RunResult, run_resolved

__all__ = ["speedup", "sweep", "render_report", "plot_report",
           "SweepReport", "SweepRow", "sequential_baseline"]

DIMENSIONS = ("process_count", "problem_size", "t_startup")
_DIM_ALIASES = {"p": "process_count", "n": "problem_size", "N": "problem_size",
                "t_startup": "t_startup", "process_count": "process_count",
                "problem_size": "problem_size"}


def speedup(t_seq: float, t_par: float) -> float:
    """T(1) / T(p); both times must be positive."""
    if t_seq <= 0 or t_par <= 0:
        raise ValueError("speedup needs positive times")
    return t_seq / t_par


@dataclass(frozen=True)
class SweepRow:
    value: float
    makespan_us: float
    speedup: float
    efficiency: float
    p: int


@dataclass(frozen=True)
class SweepReport:
    dimension: str
    baseline_us: float
    rows: tuple
    warnings: tuple = ()


def _flow_compute(flow: tuple, params: dict, me: int) -> float:
    """Total compute µs one rank contributes (task costs counted at the pool)."""
    total = 0.0
    for node in flow:
        if isinstance(node, ActionNode):
            total += eval_expr(node.cost, params, me)
        elif isinstance(node, SubactivityNode):
            total += _flow_compute(node.body, params, me)
        elif isinstance(node, LoopNode):
            total += eval_count(node.count, params, me) * \
                _flow_compute(node.body, params, me)
        elif isinstance(node, TaskPoolNode):
            count = eval_count(node.count, params, me)
            if isinstance(node.cost, tuple):
                total += sum(eval_expr(c, params, me) for c in node.cost)
            else:
                total += count * eval_expr(node.cost, params, me)
    return total


def sequential_baseline(model: Model, params: dict | None = None) -> Model:
    """The single-process degenerate model: all compute, no communication."""
    resolved = resolve_model(model, params)
    total = 0.0
    for rank in range(resolved.p):
        total += _flow_compute(resolved.flow_of(rank), resolved.params, rank)
    return Model(
        name=f"{model.name}_sequential",
        topology=TopologyDecl("mesh2d", (Num(1.0), Num(1.0))),
        roles=(RoleDecl("seq", Num(0.0), None,
                        (ActionNode("work", Num(total)),)),),
    )


def _simulate(model: Model, overrides: dict | None = None,
              costs: CostModel | None = None, label: str = "") -> RunResult:
    outcome = run_resolved(resolve_model(model, overrides, costs))
    if isinstance(outcome, DeadlockReport):
        raise SimulationError(f"deadlock during sweep{label}:\n{outcome.describe()}")
    return outcome


def _process_count_options(kind: str, value: int) -> dict:
    if kind == "master_worker":
        if value < 2:
            raise SimulationError("master_worker needs process count >= 2")
        return {"workers": value - 1}
    if kind == "spmd":
        return {"p": value}
    if kind == "pipeline":
        return {"stages": value}
    if kind == "pi":
        return {"P": value}
    if kind == "divide_conquer":
        raise SimulationError(
            "divide_conquer is sized by (arity, depth); sweep depth instead")
    raise SimulationError(f"cannot sweep process count for '{kind}'")


def _problem_size_options(spec: ParadigmSpec, value: float) -> dict:
    kind = spec.kind
    if kind in ("spmd", "pi"):
        key = "n" if kind == "spmd" else "N"
        return {key: value}
    if kind == "pipeline":
        return {"items": int(value)}
    if kind == "master_worker":
        base = list(spec.options.get("tasks", [])) or [1.0]
        reps = int(math.ceil(value / len(base)))
        return {"tasks": (base * reps)[:int(value)]}
    raise SimulationError(f"cannot sweep problem size for '{kind}'")


def _sweep_paradigm(spec: ParadigmSpec, dimension: str,
                    values: list) -> tuple:
    """Yields (value, RunResult, baseline_model) rows for a paradigm sweep."""
    rows = []
    base_model = generate(spec)
    baseline = sequential_baseline(base_model)
    for value in values:
        if dimension == "process_count":
            model = generate(spec.with_options(
                **_process_count_options(spec.kind, int(value))))
            result = _simulate(model, label=f" at {dimension}={value}")
        elif dimension == "problem_size":
            model = generate(spec.with_options(
                **_problem_size_options(spec, value)))
            result = _simulate(model, label=f" at {dimension}={value}")
            baseline = sequential_baseline(model)
        else:  # t_startup
            resolved = resolve_model(base_model)
            costs = CostModel(value, resolved.costs.t_byte,
                              resolved.costs.hop_scaling,
                              resolved.costs.send_mode)
            result = _simulate(base_model, costs=costs,
                               label=f" at {dimension}={value}")
        rows.append((value, result, baseline))
    return tuple(rows)


def _sweep_model(model: Model, dimension: str, values: list,
                 params: dict | None) -> tuple:
    rows = []
    baseline = sequential_baseline(model, params)
    for value in values:
        overrides = dict(params or {})
        costs = None
        if dimension == "process_count":
            if "P" not in model.params:
                raise SimulationError(
                    "process-count sweep needs a 'P' param in the model")
            overrides["P"] = value
        elif dimension == "problem_size":
            if "N" not in model.params:
                raise SimulationError(
                    "problem-size sweep needs an 'N' param in the model")
            overrides["N"] = value
        else:
            resolved = resolve_model(model, params)
            costs = CostModel(value, resolved.costs.t_byte,
                              resolved.costs.hop_scaling,
                              resolved.costs.send_mode)
        result = _simulate(model, overrides, costs,
                           label=f" at {dimension}={value}")
        if dimension == "problem_size":
            baseline = sequential_baseline(model, overrides)
        rows.append((value, result, baseline))
    return tuple(rows)


def sweep(target, dimension: str, values: list,
          params: dict | None = None) -> SweepReport:
    """Run one simulation per value and report makespan/speedup/efficiency.

    `target` is a Model (swept via its P/N params or its cost model) or a
    ParadigmSpec (regenerated per value).  Values may come in any order;
    rows are sorted ascending.
    """
    dim = _DIM_ALIASES.get(dimension)
    if dim is None:
        raise SimulationError(
            f"unknown sweep dimension '{dimension}' (expected one of "
            f"{', '.join(DIMENSIONS)} or aliases p, N)")
    if not values:
        raise SimulationError("sweep needs at least one value")

    if isinstance(target, ParadigmSpec):
        raw = _sweep_paradigm(target, dim, list(values))
    else:
        raw = _sweep_model(target, dim, list(values), params)

    rows = []
    warnings = []
    baseline_us = None
    for value, result, baseline_model in raw:
        t_seq = _simulate(baseline_model).metrics.makespan
        if baseline_us is None:
            baseline_us = t_seq
        p = result.metrics.p
        s = speedup(t_seq, result.metrics.makespan)
        if s > p + 1e-9:
            warnings.append(
                f"superlinear speedup {s:.6f} at {dim}={value} (p={p})")
        rows.append(SweepRow(value=float(value),
                             makespan_us=result.metrics.makespan,
                             speedup=s, efficiency=s / p, p=p))
    rows.sort(key=lambda r: r.value)
    return SweepReport(dimension=dim, baseline_us=baseline_us,
                       rows=tuple(rows), warnings=tuple(warnings))


def render_report(report: SweepReport, format: str = "table",
                  color: bool = False) -> str:
    """CSV (bit-exact, 6 decimal places) or an aligned text table."""
    if format == "csv":
        lines = ["value,makespan_us,speedup,efficiency"]
        lines += [f"{r.value:.6f},{r.makespan_us:.6f},{r.speedup:.6f},"
                  f"{r.efficiency:.6f}" for r in report.rows]
        return "\n".join(lines) + "\n"
    if format != "table":
        raise ValueError(f"unknown report format '{format}'")

    header = ["value", "makespan_us", "speedup", "efficiency"]
    body = [[f"{r.value:g}", f"{r.makespan_us:.3f}", f"{r.speedup:.4f}",
             f"{r.efficiency:.4f}"] for r in report.rows]
    widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h)
              for i, h in enumerate(header)]
    head = "  ".join(h.rjust(w) for h, w in zip(header, widths))
    if color:
        head = f"\x1b[1m{head}\x1b[0m"
    lines = [
        f"sweep over {report.dimension}; "
        f"baseline T(1) = {report.baseline_us:.3f} µs",
        head,
    ]
    lines += ["  ".join(cell.rjust(w) for cell, w in zip(row, widths))
              for row in body]
    return "\n".join(lines) + "\n"


def plot_report(report: SweepReport, path: str) -> str:
    """Render speedup and efficiency curves to an image file."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    values = [r.value for r in report.rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(values, [r.speedup for r in report.rows], "o-", label="speedup")
    if report.dimension == "process_count":
        ax1.plot(values, values, "--", color="gray", label="ideal")
    ax1.set_xlabel(report.dimension)
    ax1.set_ylabel("speedup")
    ax1.legend()
    ax2.plot(values, [r.efficiency for r in report.rows], "s-", color="tab:orange")
    ax2.set_xlabel(report.dimension)
    ax2.set_ylabel("efficiency")
    ax2.set_ylim(bottom=0)
    fig.suptitle(f"baseline T(1) = {report.baseline_us:.1f} µs")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
