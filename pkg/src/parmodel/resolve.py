"""Binding a parsed Model to concrete ranks.

Evaluates the topology arguments and role rank ranges under the merged
parameter set, builds the process graph, and resolves communication
targets to global ranks.  Both validation and simulation work on the
resulting ResolvedModel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import EvalError
from .ir import Model, RoleDecl, Target, eval_count, eval_expr
from .model import CostModel, ProcessGraph, TopologySpec, build_topology


@dataclass
class ResolvedModel:
    model: Model
    params: dict
    spec: TopologySpec
    graph: ProcessGraph
    costs: CostModel
    role_ranks: dict = field(default_factory=dict)   # role name -> list of ranks
    rank_role: dict = field(default_factory=dict)    # rank -> RoleDecl

    @property
    def p(self) -> int:
        return self.spec.p

    def ranks_of(self, role: str) -> list[int]:
        return self.role_ranks[role]

    def flow_of(self, rank: int) -> tuple:
        return self.rank_role[rank].flow

    def resolve_target(self, target: Target, me: int) -> list[int]:
        """Global ranks a target denotes for sender/receiver rank `me`.

        With an index expression the target is a single rank of the role;
        without one, a multi-rank role fans out to every rank ascending.
        """
        ranks = self.role_ranks.get(target.role)
        if ranks is None:
            raise EvalError(f"unknown role '{target.role}'")
        if target.index is None:
            return list(ranks)
        idx = eval_count(target.index, self.params, me)
        if not 0 <= idx < len(ranks):
            raise EvalError(
                f"index {idx} out of range for role '{target.role}' "
                f"({len(ranks)} rank(s))")
        return [ranks[idx]]

    def root_rank(self, role: str) -> int:
        ranks = self.role_ranks.get(role)
        if not ranks:
            raise EvalError(f"unknown role '{role}'")
        return ranks[0]


def resolve_costs(model: Model, params: dict) -> CostModel:
    return CostModel(
        t_startup=eval_expr(model.costs.t_startup, params),
        t_byte=eval_expr(model.costs.t_byte, params),
        hop_scaling=model.costs.hop_scaling,
        send_mode=model.costs.send_mode,
    )


def role_rank_range(role: RoleDecl, params: dict) -> list[int]:
    low = eval_count(role.low, params)
    if role.high is None:
        return [low]
    high = eval_count(role.high, params)
    if high < low:
        raise EvalError(
            f"role '{role.name}' rank range {low}..{high} is empty")
    return list(range(low, high + 1))


def resolve_model(model: Model, overrides: dict | None = None,
                  costs: CostModel | None = None) -> ResolvedModel:
    """Bind a model; raises EvalError/TopologyError on unresolvable input.

    `overrides` shadow file-level params; every override must name a
    declared param.
    """
    params = dict(model.params)
    if overrides:
        for key, value in overrides.items():
            if key not in params:
                raise EvalError(f"unknown param '{key}'")
            params[key] = float(value)

    args = [eval_count(a, params) for a in model.topology.args]
    spec = TopologySpec.from_args(model.topology.kind, args)
    graph = build_topology(spec)
    resolved = ResolvedModel(
        model=model,
        params=params,
        spec=spec,
        graph=graph,
        costs=costs if costs is not None else resolve_costs(model, params),
    )

    for role in model.roles:
        ranks = role_rank_range(role, params)
        resolved.role_ranks[role.name] = ranks
        for rank in ranks:
            if not 0 <= rank < spec.p:
                raise EvalError(
                    f"role '{role.name}' covers rank {rank}, outside "
                    f"0..{spec.p - 1}")
            if rank in resolved.rank_role:
                raise EvalError(
                    f"rank {rank} assigned to both "
                    f"'{resolved.rank_role[rank].name}' and '{role.name}'")
            resolved.rank_role[rank] = role
    for rank in range(spec.p):
        if rank not in resolved.rank_role:
            raise EvalError(f"rank {rank} is not assigned to any role")
    return resolved
