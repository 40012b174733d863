"""Command-line entry point.

Subcommands: validate, simulate, sweep, export, template.
Exit codes: 0 success, 1 validation/simulation error, 2 usage error,
3 deadlock detected (the report is still printed).
"""

from __future__ import annotations

import argparse
import os
import sys

from .analyze import plot_report, render_report, sweep
from .errors import ParmodelError
from .ir import Model
from .export import export_sequence, export_swimlane, export_topology_dot
from .paradigms import (
    gen_divide_conquer,
    gen_master_worker,
    gen_monte_carlo_pi,
    gen_pipeline,
    gen_spmd,
)
from .parser import parse_model, print_model
from .resolve import resolve_model
from .simulate import DeadlockReport, RunResult, run_resolved
from .validate import validate_model

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_DEADLOCK = 3


def _color_enabled() -> bool:
    mode = os.environ.get("PARMODEL_COLOR", "auto")
    if mode == "never":
        return False
    return sys.stdout.isatty()


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_ERROR


def _load_model(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            source = fh.read()
    except OSError as exc:
        return None, f"cannot read '{path}': {exc.strerror or exc}"
    result = parse_model(source)
    if not result.ok:
        lines = "\n".join(d.render(path) for d in result.errors())
        return None, lines
    return result, None


def _parse_params(pairs: list, model: Model) -> dict:
    overrides: dict = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise _UsageError(f"--param expects K=V, got '{pair}'")
        if key not in model.params:
            raise _UsageError(f"unknown param '{key}'")
        try:
            overrides[key] = float(value)
        except ValueError:
            raise _UsageError(f"--param {key} expects a number, got '{value}'")
    return overrides


class _UsageError(Exception):
    pass


def _write_output(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _metrics_table(result: RunResult, color: bool) -> str:
    metrics = result.metrics
    header = ["rank", "role", "compute_us", "comm_us", "idle_us"]
    rows = []
    for rank in range(metrics.p):
        rows.append([
            str(rank),
            result.resolved.rank_role[rank].name,
            f"{metrics.compute[rank]:.3f}",
            f"{metrics.comm[rank]:.3f}",
            f"{metrics.idle[rank]:.3f}",
        ])
    widths = [max(len(header[i]), *(len(r[i]) for r in rows))
              for i in range(len(header))]
    head = "  ".join(h.ljust(w) for h, w in zip(header, widths))
    if color:
        head = f"\x1b[1m{head}\x1b[0m"
    lines = [
        f"makespan: {metrics.makespan:.3f} µs   "
        f"messages: {metrics.message_count}   "
        f"bytes: {metrics.bytes_sent:g}",
        head,
    ]
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths))
              for row in rows]
    return "\n".join(lines) + "\n"


def _simulate_model(model: Model, overrides: dict):
    """Validate then run; returns (RunResult | DeadlockReport | None, exit_code)."""
    report = validate_model(model, overrides)
    for diag in report.diagnostics:
        print(diag.render(), file=sys.stderr)
    if not report.ok:
        return None, EXIT_ERROR
    resolved = resolve_model(model, overrides)
    return run_resolved(resolved), EXIT_OK


# -- subcommands -------------------------------------------------------------

def cmd_validate(args) -> int:
    loaded, error = _load_model(args.file)
    if error:
        return _fail(error)
    report = validate_model(loaded.model)
    output = report.render(args.file)
    if output:
        print(output)
    return EXIT_OK if report.ok else EXIT_ERROR


def cmd_simulate(args) -> int:
    loaded, error = _load_model(args.file)
    if error:
        return _fail(error)
    model = loaded.model
    overrides = _parse_params(args.param, model)
    outcome, code = _simulate_model(model, overrides)
    if outcome is None:
        return code
    if isinstance(outcome, DeadlockReport):
        print(outcome.describe())
        return EXIT_DEADLOCK
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(outcome.trace.serialize())
    sys.stdout.write(_metrics_table(outcome, _color_enabled()))
    return EXIT_OK


def cmd_sweep(args) -> int:
    loaded, error = _load_model(args.file)
    if error:
        return _fail(error)
    model = loaded.model
    try:
        values = [float(v) for v in args.values.split(",") if v]
    except ValueError:
        raise _UsageError(f"--values expects numbers, got '{args.values}'")
    if not values:
        raise _UsageError("--values must list at least one value")
    report = sweep(model, args.dim, values)
    for note in report.warnings:
        print(f"warning: {note}", file=sys.stderr)
    color = _color_enabled() and args.format == "table"
    sys.stdout.write(render_report(report, args.format, color=color))
    if args.plot:
        plot_report(report, args.plot)
        print(f"plot written to {args.plot}", file=sys.stderr)
    return EXIT_OK


def cmd_export(args) -> int:
    loaded, error = _load_model(args.file)
    if error:
        return _fail(error)
    model = loaded.model
    overrides = _parse_params(args.param, model)
    if args.view == "swimlane":
        _write_output(export_swimlane(model), args.output)
        return EXIT_OK
    if args.view == "topology":
        report = validate_model(model, overrides)
        if not report.ok:
            print(report.render(args.file), file=sys.stderr)
            return EXIT_ERROR
        resolved = resolve_model(model, overrides)
        _write_output(export_topology_dot(resolved), args.output)
        return EXIT_OK
    # sequence view runs a simulation first
    outcome, code = _simulate_model(model, overrides)
    if outcome is None:
        return code
    if isinstance(outcome, DeadlockReport):
        print(outcome.describe())
        return EXIT_DEADLOCK
    _write_output(export_sequence(outcome.trace, outcome.resolved), args.output)
    return EXIT_OK


def cmd_template(args) -> int:
    try:
        if args.kind == "master_worker":
            tasks = [float(v) for v in args.tasks.split(",") if v]
            model = gen_master_worker(args.workers, tasks, args.policy,
                                      args.payload, args.result)
        elif args.kind == "spmd":
            model = gen_spmd(args.p, args.n, args.cost, args.halo, args.steps)
        elif args.kind == "pipeline":
            model = gen_pipeline(args.stages, args.items, args.cost, args.bytes)
        elif args.kind == "divide_conquer":
            model = gen_divide_conquer(args.arity, args.depth, args.split,
                                       args.leaf, args.join)
        else:
            model = gen_monte_carlo_pi(args.p, args.n, args.cost)
    except ValueError as exc:
        raise _UsageError(str(exc))
    _write_output(print_model(model), args.output)
    return EXIT_OK


# -- argument wiring -------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parmodel",
        description="Model, simulate, and report on message-passing "
                    "parallel programs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="static checks; exit 0 ok / 1 errors")
    p_val.add_argument("file")
    p_val.set_defaults(func=cmd_validate)

    p_sim = sub.add_parser("simulate", help="run the model and print metrics")
    p_sim.add_argument("file")
    p_sim.add_argument("--param", action="append", metavar="K=V",
                       help="override a model param (repeatable)")
    p_sim.add_argument("--trace", metavar="PATH",
                       help="write the event trace (TSV) to PATH")
    p_sim.set_defaults(func=cmd_simulate)

    p_swp = sub.add_parser("sweep", help="vary one dimension and report speedup")
    p_swp.add_argument("file")
    p_swp.add_argument("--dim", required=True,
                       choices=["p", "N", "t_startup"])
    p_swp.add_argument("--values", required=True, metavar="a,b,c")
    p_swp.add_argument("--format", default="table", choices=["csv", "table"])
    p_swp.add_argument("--plot", metavar="PATH",
                       help="also render speedup/efficiency curves to PATH")
    p_swp.set_defaults(func=cmd_sweep)

    p_exp = sub.add_parser("export", help="emit a diagram view as text")
    p_exp.add_argument("file")
    p_exp.add_argument("--view", required=True,
                       choices=["topology", "swimlane", "sequence"])
    p_exp.add_argument("-o", "--output", metavar="PATH")
    p_exp.add_argument("--param", action="append", metavar="K=V")
    p_exp.set_defaults(func=cmd_export)

    p_tpl = sub.add_parser("template", help="generate a paradigm model file")
    tpl_sub = p_tpl.add_subparsers(dest="kind", required=True)

    t_mw = tpl_sub.add_parser("master_worker")
    t_mw.add_argument("--workers", type=int, default=4)
    t_mw.add_argument("--tasks", default="100,100,100,100,100,100,100,100",
                      metavar="c1,c2,...", help="task costs in µs")
    t_mw.add_argument("--policy", default="static",
                      choices=["static", "dynamic"])
    t_mw.add_argument("--payload", type=float, default=0.0)
    t_mw.add_argument("--result", type=float, default=0.0)

    t_sp = tpl_sub.add_parser("spmd")
    t_sp.add_argument("--p", type=int, default=4)
    t_sp.add_argument("--n", type=float, default=1_000_000)
    t_sp.add_argument("--cost", type=float, default=0.1,
                      help="per-element cost in µs")
    t_sp.add_argument("--halo", type=float, default=0.0, help="halo bytes")
    t_sp.add_argument("--steps", type=int, default=1)

    t_pl = tpl_sub.add_parser("pipeline")
    t_pl.add_argument("--stages", type=int, default=4)
    t_pl.add_argument("--items", type=int, default=8)
    t_pl.add_argument("--cost", type=float, default=10.0)
    t_pl.add_argument("--bytes", type=float, default=0.0)

    t_dc = tpl_sub.add_parser("divide_conquer")
    t_dc.add_argument("--arity", type=int, default=2)
    t_dc.add_argument("--depth", type=int, default=2)
    t_dc.add_argument("--split", type=float, default=10.0)
    t_dc.add_argument("--leaf", type=float, default=100.0)
    t_dc.add_argument("--join", type=float, default=10.0)

    t_pi = tpl_sub.add_parser("pi")
    t_pi.add_argument("--p", type=int, default=5)
    t_pi.add_argument("--n", type=float, default=1_000_000)
    t_pi.add_argument("--cost", type=float, default=0.1,
                      help="per-sample cost in µs")

    for t in (t_mw, t_sp, t_pl, t_dc, t_pi):
        t.add_argument("-o", "--output", metavar="PATH")
        t.set_defaults(func=cmd_template)

    return parser


def main(argv: list | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParmodelError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
