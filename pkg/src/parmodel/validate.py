"""Static semantic checks on a parsed Model before simulation.

All three checks are pure: problems come back as positioned diagnostics
inside a ValidationReport, never as exceptions.  Flows containing loops
or taskpools cannot be matched statically; they are marked deferred and
the simulator's runtime checking covers them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import Diagnostic, EvalError, TopologyError
from .ir import (
    CollectiveNode,
    LoopNode,
    Model,
    RecvNode,
    SendNode,
    TaskPoolNode,
    WaitNode,
    WorkerLoopNode,
    walk,
)
from .model import TopologySpec, build_topology
from .resolve import role_rank_range

__all__ = ["ValidationReport", "check_topology", "check_communications",
           "check_stereotypes", "validate_model"]


@dataclass
class ValidationReport:
    diagnostics: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(d.severity == "error" for d in self.diagnostics)

    @property
    def deferred(self) -> bool:
        return any("deferred to simulation" in d.message
                   for d in self.diagnostics)

    def error(self, message: str, pos: tuple | None) -> None:
        line, col = pos or (1, 1)
        self.diagnostics.append(Diagnostic("error", message, line, col))

    def warning(self, message: str, pos: tuple | None) -> None:
        line, col = pos or (1, 1)
        self.diagnostics.append(Diagnostic("warning", message, line, col))

    def extend(self, other: "ValidationReport") -> "ValidationReport":
        self.diagnostics.extend(other.diagnostics)
        return self

    def render(self, path: str = "<model>") -> str:
        return "\n".join(d.render(path) for d in self.diagnostics)


def _merged_params(model: Model, overrides: dict | None,
                   report: ValidationReport) -> dict:
    params = dict(model.params)
    for key, value in (overrides or {}).items():
        if key not in params:
            report.error(f"unknown param '{key}'", None)
        else:
            params[key] = float(value)
    return params


def _eval_topology(model: Model, params: dict,
                   report: ValidationReport) -> TopologySpec | None:
    from .ir import eval_count
    pos = model.topology.pos
    try:
        args = [eval_count(a, params) for a in model.topology.args]
        spec = TopologySpec.from_args(model.topology.kind, args)
        build_topology(spec)
        return spec
    except (EvalError, TopologyError) as exc:
        report.error(str(exc), pos)
        return None


def _shape_label(spec: TopologySpec) -> str:
    if spec.kind == "mesh2d":
        return f"mesh2d shape {spec.rows}×{spec.cols}={spec.p}"
    if spec.kind == "hypercube":
        return f"hypercube shape 2^{spec.dim}={spec.p}"
    if spec.kind == "tree":
        return f"tree(arity={spec.arity}, depth={spec.depth}) size {spec.p}"
    return f"{spec.kind} size {spec.p}"


def check_topology(model: Model, overrides: dict | None = None,
                   strict_neighbors: bool = False) -> ValidationReport:
    """Shape, rank coverage, and (optionally) neighbor-only communication."""
    report = ValidationReport()
    params = _merged_params(model, overrides, report)
    spec = _eval_topology(model, params, report)
    if spec is None:
        return report

    # conventional process-count parameter: P must agree with the topology
    if "P" in params and params["P"] != spec.p:
        report.error(
            f"{_shape_label(spec)} ≠ process count {int(params['P'])}",
            model.topology.pos)

    coverage: dict[int, str] = {}
    role_ranks: dict[str, list[int]] = {}
    for role in model.roles:
        try:
            ranks = role_rank_range(role, params)
        except EvalError as exc:
            report.error(f"role '{role.name}': {exc}", role.pos)
            continue
        role_ranks[role.name] = ranks
        for rank in ranks:
            if not 0 <= rank < spec.p:
                report.error(
                    f"role '{role.name}' covers rank {rank}, outside 0..{spec.p - 1}",
                    role.pos)
            elif rank in coverage:
                report.error(
                    f"rank {rank} assigned to both '{coverage[rank]}' "
                    f"and '{role.name}'", role.pos)
            else:
                coverage[rank] = role.name

    for rank in range(spec.p):
        if rank not in coverage:
            report.error(f"rank {rank} unassigned to any role", None)

    if strict_neighbors and not model.costs.hop_scaling and report.ok:
        graph = build_topology(spec)
        for role in model.roles:
            for node in walk(role.flow):
                if not isinstance(node, SendNode):
                    continue
                for src in role_ranks.get(role.name, []):
                    targets = role_ranks.get(node.target.role)
                    if targets is None:
                        continue
                    try:
                        if node.target.index is not None:
                            from .ir import eval_count
                            targets = [targets[eval_count(
                                node.target.index, params, src)]]
                    except (EvalError, IndexError):
                        continue
                    for dst in targets:
                        if src != dst and dst not in graph.neighbors(src) \
                                and not graph.medium:
                            report.error(
                                f"send from rank {src} to non-neighbor rank {dst} "
                                f"(strict_neighbors)", node.pos)
    return report


def _deferred_roles(model: Model, report: ValidationReport) -> set[str]:
    deferred = set()
    for role in model.roles:
        kinds = [n for n in walk(role.flow)
                 if isinstance(n, (LoopNode, TaskPoolNode, WorkerLoopNode))]
        if kinds:
            what = ("taskpool/workerloop"
                    if any(isinstance(n, (TaskPoolNode, WorkerLoopNode)) for n in kinds)
                    else "loop")
            report.warning(
                f"role '{role.name}' contains {what}: "
                f"send/recv matching deferred to simulation", role.pos)
            deferred.add(role.name)
    return deferred


def check_communications(model: Model,
                         overrides: dict | None = None) -> ValidationReport:
    """Send/recv count matching per rank pair and collective participation."""
    report = ValidationReport()
    params = _merged_params(model, overrides, report)

    role_names = {r.name for r in model.roles}
    for role in model.roles:
        for node in walk(role.flow):
            target = None
            if isinstance(node, SendNode):
                target = node.target
            elif isinstance(node, RecvNode):
                target = node.source
            elif isinstance(node, CollectiveNode) and node.root not in role_names:
                report.error(f"unknown role '{node.root}' as collective root",
                             node.pos)
            if target is not None and target.role not in role_names:
                report.error(f"unknown role '{target.role}'", node.pos)
    if not report.ok:
        return report

    spec = _eval_topology(model, params, ValidationReport())
    role_ranks: dict[str, list[int]] = {}
    if spec is not None:
        try:
            role_ranks = {r.name: role_rank_range(r, params) for r in model.roles}
        except EvalError:
            role_ranks = {}
    if not role_ranks:
        return report  # unresolvable structure is check_topology's finding

    deferred = _deferred_roles(model, report)
    rank_of_role = {name: set(ranks) for name, ranks in role_ranks.items()}

    def deferred_rank(rank: int) -> bool:
        return any(rank in rank_of_role[name] for name in deferred)

    from .ir import eval_count
    sends: dict[tuple[int, int], int] = {}
    recvs: dict[tuple[int, int], int] = {}
    positions: dict[tuple[int, int], tuple] = {}

    def endpoint_ranks(target, me):
        ranks = role_ranks[target.role]
        if target.index is None:
            return list(ranks)
        idx = eval_count(target.index, params, me)
        if not 0 <= idx < len(ranks):
            raise EvalError(f"index {idx} out of range for role '{target.role}'")
        return [ranks[idx]]

    for role in model.roles:
        if role.name in deferred:
            continue
        for me in role_ranks[role.name]:
            for node in walk(role.flow):
                try:
                    if isinstance(node, SendNode):
                        for dst in endpoint_ranks(node.target, me):
                            sends[(me, dst)] = sends.get((me, dst), 0) + 1
                            positions.setdefault((me, dst), node.pos)
                    elif isinstance(node, RecvNode):
                        for src in endpoint_ranks(node.source, me):
                            recvs[(src, me)] = recvs.get((src, me), 0) + 1
                            positions.setdefault((src, me), node.pos)
                except EvalError as exc:
                    report.error(f"role '{role.name}': {exc}", node.pos)
                    return report

    for pair in sorted(set(sends) | set(recvs)):
        src, dst = pair
        if deferred_rank(src) or deferred_rank(dst):
            continue
        n_send, n_recv = sends.get(pair, 0), recvs.get(pair, 0)
        if n_send > n_recv:
            report.error(
                f"unmatched send from P{src} to P{dst} "
                f"({n_send} send(s), {n_recv} recv(s))", positions.get(pair))
        elif n_recv > n_send:
            report.error(
                f"unmatched recv on P{dst} from P{src} "
                f"({n_send} send(s), {n_recv} recv(s))", positions.get(pair))

    # collective participation: identical (kind, root) sequence in every role
    sequences: dict[str, list] = {}
    for role in model.roles:
        inside_loop = any(
            isinstance(outer, LoopNode) and
            any(isinstance(inner, CollectiveNode) for inner in walk(outer.body))
            for outer in walk(role.flow))
        if inside_loop:
            report.warning(
                f"role '{role.name}' has collectives inside loops: "
                f"participation check deferred to simulation", role.pos)
            continue
        sequences[role.name] = [
            (n.kind, n.root) for n in walk(role.flow)
            if isinstance(n, CollectiveNode)]

    if sequences:
        names = sorted(sequences)
        reference = sequences[names[0]]
        for name in names[1:]:
            if sequences[name] != reference:
                report.error(
                    f"collective participation mismatch: role '{names[0]}' "
                    f"performs {reference or 'none'}, role '{name}' "
                    f"performs {sequences[name] or 'none'}",
                    model.role(name).pos if model.role(name) else None)
                break
    return report


def check_stereotypes(model: Model,
                      overrides: dict | None = None) -> ValidationReport:
    """Handle discipline for nonblocking sends; taskpool placement on farms."""
    report = ValidationReport()

    for role in model.roles:
        declared: dict[str, tuple] = {}
        waited: set[str] = set()
        for node in walk(role.flow):
            if isinstance(node, SendNode) and not node.blocking:
                if node.handle is None:
                    report.warning(
                        "nonblocking send has no handle and can never be waited",
                        node.pos)
                elif node.handle in declared:
                    report.error(
                        f"duplicate handle '{node.handle}' in role '{role.name}'",
                        node.pos)
                else:
                    declared[node.handle] = node.pos
            elif isinstance(node, WaitNode):
                if node.handle not in declared:
                    report.error(
                        f"wait references undeclared handle '{node.handle}'",
                        node.pos)
                waited.add(node.handle)
        for handle, pos in declared.items():
            if handle not in waited:
                report.warning(
                    f"nonblocking send handle '{handle}' is never waited", pos)

    if model.topology.kind in ("farm", "star"):
        params = _merged_params(model, overrides, ValidationReport())
        master_role = None
        for role in model.roles:
            try:
                if 0 in role_rank_range(role, params):
                    master_role = role.name
            except EvalError:
                return report  # unresolvable ranges are reported elsewhere
        for role in model.roles:
            has_pool = any(isinstance(n, TaskPoolNode) for n in walk(role.flow))
            has_loop = any(isinstance(n, WorkerLoopNode) for n in walk(role.flow))
            if has_pool and role.name != master_role:
                report.error(
                    f"taskpool in non-master role '{role.name}' of a farm",
                    role.pos)
            if has_loop and role.name == master_role:
                report.error(
                    f"workerloop in master role '{role.name}' of a farm",
                    role.pos)
    return report


def validate_model(model: Model, overrides: dict | None = None,
                   strict_neighbors: bool = False) -> ValidationReport:
    """All static checks combined, in topology / communications / stereotype order."""
    report = ValidationReport()
    report.extend(check_topology(model, overrides, strict_neighbors))
    report.extend(check_communications(model, overrides))
    report.extend(check_stereotypes(model, overrides))
    return report
