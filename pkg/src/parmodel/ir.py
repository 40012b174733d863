"""In-memory representation of a parsed model.

Nodes carry no source positions in their compared fields, so two models
are structurally equal exactly when they describe the same program; the
parse -> print -> parse round trip relies on that.  Optional `pos`
metadata (line, column) is kept for validator diagnostics only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import EvalError

COLLECTIVE_KINDS = ("bcast", "reduce", "gather", "scatter", "barrier")

# Unit suffixes accepted on numeric literals; times normalize to
# microseconds, sizes to bytes (KB and MB are 1024-based).
UNITS = {
    "us": 1.0,
    "ms": 1000.0,
    "s": 1_000_000.0,
    "B": 1.0,
    "KB": 1024.0,
    "MB": 1024.0 * 1024.0,
}


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

class Expr:
    """Arithmetic over literals, params, and the rank variable `me`."""


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Name(Expr):
    ident: str


@dataclass(frozen=True)
class MeVar(Expr):
    pass


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # + - * /
    left: Expr
    right: Expr


def _eval(e: Expr, params: dict, me: int | None) -> float:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Name):
        if e.ident not in params:
            raise EvalError(f"unbound name '{e.ident}'")
        return float(params[e.ident])
    if isinstance(e, MeVar):
        if me is None:
            raise EvalError("'me' is not defined in this context")
        return float(me)
    if isinstance(e, Neg):
        return -_eval(e.operand, params, me)
    if isinstance(e, BinOp):
        left = _eval(e.left, params, me)
        right = _eval(e.right, params, me)
        if e.op == "+":
            return left + right
        if e.op == "-":
            return left - right
        if e.op == "*":
            return left * right
        if e.op == "/":
            if right == 0:
                raise EvalError("division by zero")
            return left / right
    raise EvalError(f"cannot evaluate {e!r}")


def eval_expr(e: Expr, params: dict, me: int | None = None) -> float:
    """Evaluate to a finite non-negative number (times in µs, sizes in bytes)."""
    value = _eval(e, params, me)
    if not math.isfinite(value):
        raise EvalError(f"expression evaluates to non-finite value {value}")
    if value < 0:
        raise EvalError(f"expression evaluates to negative value {value}")
    return value


def eval_count(e: Expr, params: dict, me: int | None = None) -> int:
    """Evaluate a loop/task count: rounds half-up, errors when negative."""
    value = eval_expr(e, params, me)
    return int(math.floor(value + 0.5))


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def format_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def format_expr(e: Expr, parent_prec: int = 0, right_side: bool = False) -> str:
    """Canonical text form; parse(format(e)) reproduces e exactly."""
    if isinstance(e, Num):
        return format_number(e.value)
    if isinstance(e, Name):
        return e.ident
    if isinstance(e, MeVar):
        return "me"
    if isinstance(e, Neg):
        inner = format_expr(e.operand, 3)
        return f"-{inner}"
    if isinstance(e, BinOp):
        prec = _PRECEDENCE[e.op]
        text = (f"{format_expr(e.left, prec)} {e.op} "
                f"{format_expr(e.right, prec, right_side=True)}")
        # Parenthesize when we bind looser than the context, or equally on
        # the right of a non-associative - or /.
        if prec < parent_prec or (prec == parent_prec and right_side):
            return f"({text})"
        return text
    raise ValueError(f"cannot format {e!r}")


# ---------------------------------------------------------------------------
# Activity-flow nodes (one swimlane per role)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Target:
    """A communication endpoint: role name plus optional rank-in-role index.

    Without an index on a multi-rank role the target fans out: the
    operation repeats once per rank of the role, ascending.
    """

    role: str
    index: Expr | None = None


@dataclass(frozen=True)
class ActionNode:
    name: str
    cost: Expr
    note: str | None = None
    pos: tuple | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SubactivityNode:
    name: str
    body: tuple
    note: str | None = None
    pos: tuple | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SendNode:
    target: Target
    size: Expr
    blocking: bool = True
    handle: str | None = None  # nonblocking sends may bind a wait handle
    note: str | None = None
    pos: tuple | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class RecvNode:
    source: Target
    size: Expr
    note: str | None = None
    pos: tuple | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class WaitNode:
    handle: str
    note: str | None = None
    pos: tuple | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CollectiveNode:
    kind: str  # bcast | reduce | gather | scatter | barrier
    root: str  # role name; root rank is the role's lowest rank
    size: Expr
    note: str | None = None
    pos: tuple | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class LoopNode:
    count: Expr
    body: tuple
    note: str | None = None
    pos: tuple | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class TaskPoolNode:
    """Master-side task distribution; pairs with WorkerLoopNode in workers.

    `cost` is one expression (uniform tasks) or a tuple of expressions,
    one per task.  Expressions are evaluated with me = the master rank.
    """

    count: Expr
    cost: Expr | tuple
    policy: str  # static | dynamic
    payload: Expr
    result: Expr
    note: str | None = None
    pos: tuple | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class WorkerLoopNode:
    note: str | None = None
    pos: tuple | None = field(default=None, compare=False, repr=False)


Node = (ActionNode, SubactivityNode, SendNode, RecvNode, WaitNode,
        CollectiveNode, LoopNode, TaskPoolNode, WorkerLoopNode)


@dataclass(frozen=True)
class RoleDecl:
    """A role and the contiguous rank range it runs on.

    `high` is None for a single-rank declaration (`rank EXPR`); otherwise
    the role covers eval(low)..eval(high) inclusive.
    """

    name: str
    low: Expr
    high: Expr | None
    flow: tuple
    pos: tuple | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class TopologyDecl:
    kind: str
    args: tuple
    pos: tuple | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CostDecl:
    t_startup: Expr = Num(0.0)
    t_byte: Expr = Num(0.0)
    hop_scaling: bool = False
    send_mode: str = "rendezvous"


@dataclass(frozen=True)
class Model:
    """A parsed model: topology + costs + params + one flow per role."""

    name: str
    topology: TopologyDecl
    costs: CostDecl = CostDecl()
    params: dict = field(default_factory=dict)
    roles: tuple = ()

    def role(self, name: str) -> RoleDecl | None:
        for r in self.roles:
            if r.name == name:
                return r
        return None


def walk(nodes: tuple):
    """Yield every node in a flow, depth-first, including nested bodies."""
    for node in nodes:
        yield node
        if isinstance(node, (SubactivityNode, LoopNode)):
            yield from walk(node.body)


def flow_has(nodes: tuple, kinds: tuple) -> bool:
    return any(isinstance(n, kinds) for n in walk(nodes))
