"""Text renderings of the three diagram views.

* topology  -- Graphviz DOT (undirected), one node per rank, one edge per
               adjacency pair; edges carrying messages get size labels.
* swimlane  -- one lane per role; nodes carry their stereotype tags
               (<<action+>>, <<subactivity+>>, <<bsend+>>, <<nbsend+>>,
               <<collective+>>); collectives link lanes by a group id.
* sequence  -- lifelines over simulated time with <<create>>/<<destroy>>
               and one arrow line per completed message, tagged
               <<synchronous>> or <<asynchronous>>.

All exports are deterministic byte-for-byte for identical inputs.
"""

from __future__ import annotations

from .ir import (
    ActionNode,
    CollectiveNode,
    LoopNode,
    Model,
    RecvNode,
    SendNode,
    SubactivityNode,
    TaskPoolNode,
    WaitNode,
    WorkerLoopNode,
    format_expr,
    walk,
)
from .parser import _format_target, _quote
from .resolve import ResolvedModel
from .simulate import Trace

__all__ = ["export_topology_dot", "export_swimlane", "export_sequence"]


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _message_labels(resolved: ResolvedModel) -> dict:
    """Map undirected adjacency edges to the byte-size expressions they carry."""
    labels: dict[tuple[int, int], list[str]] = {}
    for role in resolved.model.roles:
        for me in resolved.ranks_of(role.name):
            for node in walk(role.flow):
                if not isinstance(node, SendNode):
                    continue
                try:
                    targets = resolved.resolve_target(node.target, me)
                except Exception:
                    continue
                text = format_expr(node.size)
                for dst in targets:
                    edge = (me, dst) if me < dst else (dst, me)
                    bucket = labels.setdefault(edge, [])
                    if text not in bucket:
                        bucket.append(text)
    return labels


def export_topology_dot(resolved: ResolvedModel) -> str:
    """Collaboration-diagram view: the process graph as Graphviz DOT."""
    graph = resolved.graph
    labels = _message_labels(resolved)
    lines = [f"graph {_dot_quote(resolved.model.name)} {{",
             "  node [shape=box];"]
    for rank in range(graph.p):
        role = resolved.rank_role[rank].name
        lines.append(f"  p{rank} [label={_dot_quote(f'P{rank}:{role}')}];")
    for u, v in graph.edges():
        carried = labels.get((u, v))
        if carried:
            lines.append(f"  p{u} -- p{v} [label={_dot_quote(', '.join(carried))}];")
        else:
            lines.append(f"  p{u} -- p{v};")
    lines.append("}")
    return "\n".join(lines) + "\n"


_STEREO_ACTION = "<<action+>>"
_STEREO_SUB = "<<subactivity+>>"
_STEREO_BSEND = "<<bsend+>>"
_STEREO_NBSEND = "<<nbsend+>>"
_STEREO_COLL = "<<collective+>>"


def _lane_lines(nodes: tuple, indent: int, group_counter: list,
                out: list) -> None:
    pad = "  " * indent
    for node in nodes:
        if isinstance(node, ActionNode):
            out.append(f"{pad}{_STEREO_ACTION} {_quote(node.name)} "
                       f"cost {format_expr(node.cost)}")
        elif isinstance(node, SubactivityNode):
            out.append(f"{pad}{_STEREO_SUB} {_quote(node.name)}:")
            _lane_lines(node.body, indent + 1, group_counter, out)
            continue
        elif isinstance(node, SendNode):
            tag = _STEREO_BSEND if node.blocking else _STEREO_NBSEND
            suffix = f" as {node.handle}" if node.handle else ""
            out.append(f"{pad}{tag} send to {_format_target(node.target)} "
                       f"size {format_expr(node.size)}{suffix}")
        elif isinstance(node, RecvNode):
            out.append(f"{pad}{_STEREO_BSEND} recv from "
                       f"{_format_target(node.source)} size {format_expr(node.size)}")
        elif isinstance(node, WaitNode):
            out.append(f"{pad}{_STEREO_NBSEND} wait {node.handle}")
        elif isinstance(node, CollectiveNode):
            group_counter[0] += 1
            out.append(f"{pad}{_STEREO_COLL} {node.kind} root {node.root} "
                       f"size {format_expr(node.size)}  [group G{group_counter[0]}]")
        elif isinstance(node, LoopNode):
            out.append(f"{pad}loop {format_expr(node.count)}:")
            _lane_lines(node.body, indent + 1, group_counter, out)
            continue
        elif isinstance(node, TaskPoolNode):
            if isinstance(node.cost, tuple):
                cost = "[" + ", ".join(format_expr(c) for c in node.cost) + "]"
            else:
                cost = format_expr(node.cost)
            out.append(f"{pad}{_STEREO_SUB} taskpool count "
                       f"{format_expr(node.count)} cost {cost} policy {node.policy}")
        elif isinstance(node, WorkerLoopNode):
            out.append(f"{pad}{_STEREO_SUB} workerloop")
        if getattr(node, "note", None):
            out.append(f"{pad}  note: {node.note}")


def export_swimlane(model: Model) -> str:
    """Activity-diagram view: one swimlane per role, stereotyped nodes.

    The k-th collective of every lane shares group id Gk, standing in for
    the undirected link between lanes in the drawn diagram.
    """
    out = [f"swimlanes {_quote(model.name)}"]
    for role in model.roles:
        if role.high is None:
            where = f"rank {format_expr(role.low)}"
        else:
            where = f"ranks {format_expr(role.low)} .. {format_expr(role.high)}"
        out.append("")
        out.append(f"lane {role.name} ({where})")
        _lane_lines(role.flow, 1, [0], out)
    return "\n".join(out) + "\n"


def _fmt_bytes(size: float | None) -> str:
    if size is None:
        return "0B"
    if size == int(size):
        return f"{int(size)}B"
    return f"{size}B"


def export_sequence(trace: Trace, resolved: ResolvedModel) -> str:
    """Timed sequence-diagram view of a completed run.

    One lifeline per rank (<<controller>>), an <<actor>> for the invoking
    user, and a MainProgram lifeline aggregating collectives when the
    trace contains any.  Messages appear at their completion times.
    """
    p = resolved.p
    has_collectives = any(e.kind == "collective_end" for e in trace.events)

    out = [f"sequence {_quote(resolved.model.name)}",
           "actor User <<actor>>"]
    if has_collectives:
        out.append("lifeline MainProgram <<controller>>")
    for rank in range(p):
        role = resolved.rank_role[rank].name
        out.append(f"lifeline P{rank}:{role} <<controller>>")

    for rank in range(p):
        out.append(f"@0.000 <<create>> P{rank}")

    seen_groups: set[int] = set()
    for event in trace.events:
        if event.kind == "send_end":
            out.append(
                f"@{event.time:.3f} P{event.rank} -> P{event.peer} : "
                f"{event.label}({_fmt_bytes(event.size)}) <<{event.sync}>>")
        elif event.kind == "collective_end" and event.group not in seen_groups:
            seen_groups.add(event.group)
            out.append(
                f"@{event.time:.3f} MainProgram : "
                f"{event.label}({_fmt_bytes(event.size)}) <<synchronous>>")

    ends = {rank: 0.0 for rank in range(p)}
    for event in trace.events:
        ends[event.rank] = max(ends[event.rank], event.time)
    for rank in range(p):
        out.append(f"@{ends[rank]:.3f} <<destroy>> P{rank}")
    return "\n".join(out) + "\n"
