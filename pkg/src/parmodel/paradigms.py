"""Ready-made models for the classic parallel programming paradigms.

Every generator returns a Model that passes validation and is a fixpoint
of parse(print(m)).  Where per-rank communication partners differ (SPMD
ring neighbors, pipeline stages, tree parents), the generators emit one
role per rank, since rank ranges in the model language are contiguous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .ir import (
    ActionNode,
    BinOp,
    CollectiveNode,
    CostDecl,
    LoopNode,
    Model,
    Name,
    Num,
    RecvNode,
    RoleDecl,
    SendNode,
    Target,
    TaskPoolNode,
    TopologyDecl,
    WorkerLoopNode,
)

__all__ = [
    "ParadigmSpec", "generate", "gen_master_worker", "gen_spmd",
    "gen_pipeline", "gen_divide_conquer", "gen_monte_carlo_pi", "gen_hybrid",
]

ZERO_COSTS = CostDecl()


@dataclass(frozen=True)
class ParadigmSpec:
    """A paradigm kind plus the keyword options its generator takes."""

    kind: str  # master_worker | spmd | pipeline | divide_conquer | pi | hybrid
    options: dict = field(default_factory=dict)

    def with_options(self, **overrides) -> "ParadigmSpec":
        merged = dict(self.options)
        merged.update(overrides)
        return ParadigmSpec(self.kind, merged)


def generate(spec: ParadigmSpec) -> Model:
    generators = {
        "master_worker": gen_master_worker,
        "spmd": gen_spmd,
        "pipeline": gen_pipeline,
        "divide_conquer": gen_divide_conquer,
        "pi": gen_monte_carlo_pi,
        "hybrid": gen_hybrid,
    }
    if spec.kind not in generators:
        raise ValueError(f"unknown paradigm kind '{spec.kind}'")
    return generators[spec.kind](**spec.options)


def _single_rank(name: str, flow: tuple, costs: CostDecl) -> Model:
    return Model(
        name=name,
        topology=TopologyDecl("mesh2d", (Num(1.0), Num(1.0))),
        costs=costs,
        roles=(RoleDecl("main", Num(0.0), None, flow),),
    )


def gen_master_worker(workers: int, tasks: list, policy: str = "static",
                      payload: float = 0.0, result: float = 0.0,
                      costs: CostDecl = ZERO_COSTS) -> Model:
    """Farm of `workers`+1 ranks; master distributes the given task costs (µs)."""
    if workers < 1:
        raise ValueError("master_worker needs at least 1 worker")
    if not tasks:
        raise ValueError("empty task list")
    if policy not in ("static", "dynamic"):
        raise ValueError("policy must be static or dynamic")
    uniform = all(c == tasks[0] for c in tasks)
    cost = Num(float(tasks[0])) if uniform else tuple(Num(float(c)) for c in tasks)
    pool = TaskPoolNode(
        count=Num(float(len(tasks))), cost=cost, policy=policy,
        payload=Num(float(payload)), result=Num(float(result)))
    master = RoleDecl("master", Num(0.0), None, (pool,))
    worker = RoleDecl("worker", Num(1.0), Num(float(workers)),
                      (WorkerLoopNode(),))
    return Model(
        name=f"master_worker_{policy}",
        topology=TopologyDecl("farm", (Num(float(workers + 1)),)),
        costs=costs,
        roles=(master, worker),
    )


def gen_spmd(p: int, n: float, per_element_cost: float,
             halo_bytes: float = 0.0, steps: int = 1,
             costs: CostDecl = ZERO_COSTS) -> Model:
    """Data-parallel ring: compute a chunk, then shift halos around the ring.

    Each step every rank sends its halo to the right neighbor and receives
    one from the left; even ranks send first so blocking rendezvous
    exchanges cannot deadlock.
    """
    if p < 1 or steps < 1 or n < p:
        raise ValueError("spmd needs p >= 1, steps >= 1 and n >= p")
    chunk_cost = float(math.ceil(n / p)) * float(per_element_cost)
    compute = ActionNode("compute", Num(chunk_cost))

    if p == 1:
        body: tuple = (compute,)
        flow = (LoopNode(Num(float(steps)), body),) if steps > 1 else body
        return _single_rank("spmd", flow, costs)

    kind, args = ("mesh2d", (Num(1.0), Num(2.0))) if p == 2 else \
        ("ring", (Num(float(p)),))
    halo = Num(float(halo_bytes))
    roles = []
    for rank in range(p):
        right = f"n{(rank + 1) % p}"
        left = f"n{(rank - 1) % p}"
        send = SendNode(Target(right), halo, blocking=True)
        recv = RecvNode(Target(left), halo)
        exchange = (send, recv) if rank % 2 == 0 else (recv, send)
        body = (compute,) + exchange
        flow = (LoopNode(Num(float(steps)), body),) if steps > 1 else body
        roles.append(RoleDecl(f"n{rank}", Num(float(rank)), None, flow))
    return Model(name="spmd", topology=TopologyDecl(kind, args),
                 costs=costs, roles=tuple(roles))


def gen_pipeline(stages: int, items: int, stage_cost: float,
                 item_bytes: float = 0.0,
                 costs: CostDecl = ZERO_COSTS) -> Model:
    """A chain of stages; each item flows stage to stage."""
    if stages < 1 or items < 1:
        raise ValueError("pipeline needs stages >= 1 and items >= 1")
    work = ActionNode("stage", Num(float(stage_cost)))
    count = Num(float(items))
    if stages == 1:
        return _single_rank("pipeline", (LoopNode(count, (work,)),), costs)

    size = Num(float(item_bytes))
    roles = []
    for i in range(stages):
        body: list = []
        if i > 0:
            body.append(RecvNode(Target(f"stage{i - 1}"), size))
        body.append(work)
        if i + 1 < stages:
            body.append(SendNode(Target(f"stage{i + 1}"), size, blocking=True))
        roles.append(RoleDecl(f"stage{i}", Num(float(i)), None,
                              (LoopNode(count, tuple(body)),)))
    return Model(
        name="pipeline",
        topology=TopologyDecl("mesh2d", (Num(1.0), Num(float(stages)))),
        costs=costs,
        roles=tuple(roles),
    )


def _tree_size(arity: int, depth: int) -> int:
    if arity == 1:
        return depth + 1
    return (arity ** (depth + 1) - 1) // (arity - 1)


def gen_divide_conquer(arity: int, depth: int, split_cost: float,
                       leaf_cost: float, join_cost: float,
                       payload_bytes: float = 0.0,
                       costs: CostDecl = ZERO_COSTS) -> Model:
    """Split / compute / join over a complete process tree.

    Internal ranks split, scatter to their children, gather the partial
    results and join them; leaves carry the compute.
    """
    if arity < 2 or depth < 0:
        raise ValueError("divide_conquer needs arity >= 2 and depth >= 0")
    p = _tree_size(arity, depth)
    if p == 1:
        return _single_rank("divide_conquer",
                            (ActionNode("compute", Num(float(leaf_cost))),),
                            costs)

    size = Num(float(payload_bytes))
    roles = []
    for rank in range(p):
        children = [c for c in range(arity * rank + 1, arity * rank + arity + 1)
                    if c < p]
        parent = (rank - 1) // arity if rank > 0 else None
        body: list = []
        if parent is not None:
            body.append(RecvNode(Target(f"n{parent}"), size))
        if children:
            body.append(ActionNode("split", Num(float(split_cost))))
            body.extend(SendNode(Target(f"n{c}"), size, blocking=True)
                        for c in children)
            body.extend(RecvNode(Target(f"n{c}"), size) for c in children)
            body.append(ActionNode("join", Num(float(join_cost))))
        else:
            body.append(ActionNode("compute", Num(float(leaf_cost))))
        if parent is not None:
            body.append(SendNode(Target(f"n{parent}"), size, blocking=True))
        roles.append(RoleDecl(f"n{rank}", Num(float(rank)), None, tuple(body)))
    return Model(
        name="divide_conquer",
        topology=TopologyDecl("tree", (Num(float(arity)), Num(float(depth)))),
        costs=costs,
        roles=tuple(roles),
    )


def gen_monte_carlo_pi(P: int, N: float, sample_cost: float,
                       costs: CostDecl = ZERO_COSTS) -> Model:
    """The Monte Carlo PI farm: bcast, one sampling task per worker,
    point-to-point result collection, and a final reduce action.

    The 8-byte result size and the 5µs reduce are modeling choices.
    The model stays parameterized over P and N, so both can be swept.
    """
    if P < 2:
        raise ValueError("pi needs P >= 2")
    bcast = CollectiveNode("bcast", "master", Num(8.0))
    p_minus_1 = BinOp("-", Name("P"), Num(1.0))
    task_cost = BinOp("*", BinOp("/", Name("N"), p_minus_1),
                      Num(float(sample_cost)))
    master = RoleDecl("master", Num(0.0), None, (
        bcast,
        TaskPoolNode(count=p_minus_1, cost=task_cost, policy="static",
                     payload=Num(8.0), result=Num(8.0)),
        RecvNode(Target("worker"), Num(8.0)),
        ActionNode("reduce", Num(5.0)),
    ))
    worker = RoleDecl("worker", Num(1.0), p_minus_1, (
        bcast,
        WorkerLoopNode(),
        SendNode(Target("master"), Num(8.0), blocking=True),
    ))
    return Model(
        name="pi_montecarlo",
        topology=TopologyDecl("farm", (Name("P"),)),
        costs=costs,
        params={"P": float(P), "N": float(N)},
        roles=(master, worker),
    )


def _rewrite_flow(resolved, rank: int, nodes: tuple) -> tuple:
    """Rebase a component flow onto per-rank role names h0..h(p-1).

    Targets are resolved for this rank and pinned to concrete roles;
    index-less multi-rank targets expand into one node per peer.
    """
    out: list = []
    for node in nodes:
        if isinstance(node, SendNode):
            out.extend(
                SendNode(Target(f"h{dst}"), node.size, node.blocking,
                         node.handle, node.note)
                for dst in resolved.resolve_target(node.target, rank))
        elif isinstance(node, RecvNode):
            out.extend(
                RecvNode(Target(f"h{src}"), node.size, node.note)
                for src in resolved.resolve_target(node.source, rank))
        elif isinstance(node, CollectiveNode):
            root = resolved.root_rank(node.root)
            out.append(CollectiveNode(node.kind, f"h{root}", node.size,
                                      node.note))
        elif isinstance(node, LoopNode):
            out.append(LoopNode(node.count,
                                _rewrite_flow(resolved, rank, node.body),
                                node.note))
        else:
            out.append(node)
    return tuple(out)


def gen_hybrid(components: list, costs: CostDecl | None = None) -> Model:
    """Concatenate the per-rank flows of several generated paradigms.

    All components must resolve to the same process count; the composed
    model uses the first component's topology (and its costs unless given).
    """
    from .resolve import resolve_model

    if not components:
        raise ValueError("hybrid needs at least one component")
    models = [generate(c) if isinstance(c, ParadigmSpec) else c
              for c in components]
    resolved = [resolve_model(m) for m in models]
    p = resolved[0].p
    for r in resolved[1:]:
        if r.p != p:
            raise ValueError(
                f"hybrid components disagree on process count: {p} vs {r.p}")

    params: dict = {}
    for m in models:
        for key, value in m.params.items():
            if key in params and params[key] != value:
                raise ValueError(f"hybrid components disagree on param '{key}'")
            params[key] = value

    roles = []
    for rank in range(p):
        flow: tuple = ()
        for r in resolved:
            flow = flow + _rewrite_flow(r, rank, r.flow_of(rank))
        roles.append(RoleDecl(f"h{rank}", Num(float(rank)), None, flow))
    return Model(
        name="hybrid",
        topology=TopologyDecl(resolved[0].spec.kind,
                              tuple(Num(float(a)) for a in _spec_args(resolved[0].spec))),
        costs=costs if costs is not None else models[0].costs,
        params=params,
        roles=tuple(roles),
    )


def _spec_args(spec) -> list:
    if spec.kind == "mesh2d":
        return [spec.rows, spec.cols]
    if spec.kind == "hypercube":
        return [spec.dim]
    if spec.kind == "tree":
        return [spec.arity, spec.depth]
    return [spec.p]
