"""Parser and canonical pretty-printer for .pmod model text.

Recursive descent over the token stream from `lexer`.  Parse failures
produce positioned diagnostics instead of exceptions; `print_model`
emits canonical text such that parse(print(m)) is structurally equal
to m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import Diagnostic
from .ir import (
    COLLECTIVE_KINDS,
    ActionNode,
    BinOp,
    CollectiveNode,
    CostDecl,
    Expr,
    LoopNode,
    MeVar,
    Model,
    Name,
    Neg,
    Num,
    RecvNode,
    RoleDecl,
    SendNode,
    SubactivityNode,
    Target,
    TaskPoolNode,
    TopologyDecl,
    WaitNode,
    WorkerLoopNode,
    eval_expr,
    format_expr,
    format_number,
    walk,
)
from .lexer import LexError, Token, tokenize
from .model import SEND_MODES, TOPOLOGY_KINDS

__all__ = ["parse_model", "print_model", "ParseResult", "eval_expr"]

NODE_KEYWORDS = frozenset({
    "action", "subactivity", "send", "recv", "wait", "collective",
    "loop", "taskpool", "workerloop",
})

COST_KEYS = ("t_startup", "t_byte", "hop_scaling", "send_mode")


@dataclass
class ParseResult:
    model: Model | None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.model is not None and not any(
            d.severity == "error" for d in self.diagnostics)

    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]


class _Abort(Exception):
    pass


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.diagnostics: list[Diagnostic] = []

    # -- token plumbing ----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        idx = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[idx]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.type != "EOF":
            self.pos += 1
        return tok

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.type == "KEYWORD" and tok.text == word

    def fail(self, message: str, tok: Token | None = None) -> None:
        tok = tok or self.peek()
        self.diagnostics.append(Diagnostic("error", message, tok.line, tok.column))
        raise _Abort

    def expect_keyword(self, word: str) -> Token:
        tok = self.peek()
        if not (tok.type == "KEYWORD" and tok.text == word):
            self.fail(f"expected '{word}', got '{tok.text or tok.type}'", tok)
        return self.advance()

    def expect(self, token_type: str, what: str) -> Token:
        tok = self.peek()
        if tok.type != token_type:
            self.fail(f"expected {what}, got '{tok.text or tok.type}'", tok)
        return self.advance()

    def comments_since(self, start: int) -> str | None:
        parts = [t.comment for t in self.tokens[start:self.pos] if t.comment]
        return " ".join(parts) if parts else None

    # -- grammar -----------------------------------------------------------

    def parse_model(self) -> Model:
        if self.peek().type == "EOF":
            self.fail("missing topology declaration", self.peek())
        if self.at_keyword("topology"):
            # keep going so the topology line itself still gets diagnosed
            tok = self.peek()
            self.diagnostics.append(Diagnostic(
                "error", "missing model declaration", tok.line, tok.column))
            name = ""
        else:
            self.expect_keyword("model")
            name = self.expect("STRING", "a quoted model name").text

        if not self.at_keyword("topology"):
            self.fail("missing topology declaration")
        topology = self.parse_topology()

        costs = CostDecl()
        if self.at_keyword("costs"):
            costs = self.parse_costs()
        params: dict = {}
        if self.at_keyword("params"):
            params = self.parse_params()

        roles: list[RoleDecl] = []
        seen: set[str] = set()
        while self.at_keyword("role"):
            role = self.parse_role()
            if role.name in seen:
                self.diagnostics.append(Diagnostic(
                    "error", f"duplicate role '{role.name}'",
                    role.pos[0], role.pos[1]))
                raise _Abort
            seen.add(role.name)
            roles.append(role)

        if not roles:
            self.fail("missing role declaration (at least one role is required)")
        tok = self.peek()
        if tok.type != "EOF":
            self.fail(f"unknown keyword '{tok.text}' at top level", tok)

        model = Model(name=name, topology=topology, costs=costs,
                      params=params, roles=tuple(roles))
        self.check_bound_names(model)
        return model

    def parse_topology(self) -> TopologyDecl:
        self.expect_keyword("topology")
        kind_tok = self.expect("IDENT", "a topology kind")
        if kind_tok.text not in TOPOLOGY_KINDS:
            self.fail(f"unknown topology kind '{kind_tok.text}'", kind_tok)
        self.expect("LPAREN", "'('")
        args = [self.parse_expr()]
        while self.peek().type == "COMMA":
            self.advance()
            args.append(self.parse_expr())
        self.expect("RPAREN", "')'")
        return TopologyDecl(kind=kind_tok.text, args=tuple(args),
                            pos=(kind_tok.line, kind_tok.column))

    def parse_costs(self) -> CostDecl:
        self.expect_keyword("costs")
        self.expect("LBRACE", "'{'")
        values: dict = {}
        while self.peek().type != "RBRACE":
            key_tok = self.expect("IDENT", "a cost key")
            if key_tok.text not in COST_KEYS:
                self.fail(f"unknown cost key '{key_tok.text}'", key_tok)
            if key_tok.text in values:
                self.fail(f"duplicate cost key '{key_tok.text}'", key_tok)
            self.expect("EQUALS", "'='")
            if key_tok.text == "hop_scaling":
                tok = self.advance()
                if tok.text not in ("true", "false"):
                    self.fail("hop_scaling must be true or false", tok)
                values["hop_scaling"] = tok.text == "true"
            elif key_tok.text == "send_mode":
                tok = self.expect("IDENT", "a send mode")
                if tok.text not in SEND_MODES:
                    self.fail(f"send_mode must be one of {', '.join(SEND_MODES)}", tok)
                values["send_mode"] = tok.text
            else:
                values[key_tok.text] = self.parse_expr()
        self.advance()
        return CostDecl(**values)

    def parse_params(self) -> dict:
        self.expect_keyword("params")
        self.expect("LBRACE", "'{'")
        params: dict = {}
        while self.peek().type != "RBRACE":
            name_tok = self.expect("IDENT", "a parameter name")
            if name_tok.text in params:
                self.fail(f"duplicate param '{name_tok.text}'", name_tok)
            self.expect("EQUALS", "'='")
            value_tok = self.expect("NUMBER", "a number")
            value = value_tok.value
            if value is None or not math.isfinite(value) or value < 0:
                self.fail("param values must be finite and non-negative", value_tok)
            params[name_tok.text] = value
        self.advance()
        return params

    def parse_role(self) -> RoleDecl:
        role_tok = self.expect_keyword("role")
        name = self.expect("IDENT", "a role name").text
        self.expect_keyword("on")
        if self.at_keyword("rank"):
            self.advance()
            low, high = self.parse_expr(), None
        elif self.at_keyword("ranks"):
            self.advance()
            low = self.parse_expr()
            self.expect("DOTDOT", "'..'")
            high = self.parse_expr()
        else:
            self.fail("expected 'rank' or 'ranks'")
        flow = self.parse_block()
        return RoleDecl(name=name, low=low, high=high, flow=flow,
                        pos=(role_tok.line, role_tok.column))

    def parse_block(self) -> tuple:
        self.expect("LBRACE", "'{'")
        return self.block_body()

    def block_body(self) -> tuple:
        nodes = []
        while self.peek().type != "RBRACE":
            tok = self.peek()
            if tok.type == "EOF":
                self.fail("unexpected end of input inside block (missing '}')", tok)
            if not (tok.type == "KEYWORD" and tok.text in NODE_KEYWORDS):
                self.fail(f"unknown keyword '{tok.text or tok.type}' in flow", tok)
            nodes.append(self.parse_node())
        self.advance()
        return tuple(nodes)

    def parse_node(self):
        tok = self.peek()
        start = self.pos
        pos = (tok.line, tok.column)
        word = tok.text

        if word == "action":
            self.advance()
            name = self.expect("STRING", "a quoted action name").text
            self.expect_keyword("cost")
            cost = self.parse_expr()
            return ActionNode(name, cost, self.comments_since(start), pos)

        if word == "subactivity":
            self.advance()
            name = self.expect("STRING", "a quoted subactivity name").text
            self.expect("LBRACE", "'{'")
            note = self.comments_since(start)
            return SubactivityNode(name, self.block_body(), note, pos)

        if word == "send":
            self.advance()
            self.expect_keyword("to")
            target = self.parse_target()
            self.expect_keyword("size")
            size = self.parse_expr()
            blocking, handle = True, None
            if self.at_keyword("blocking"):
                self.advance()
            elif self.at_keyword("nonblocking"):
                self.advance()
                blocking = False
                if self.at_keyword("as"):
                    self.advance()
                    handle = self.expect("IDENT", "a handle name").text
            else:
                self.fail("expected 'blocking' or 'nonblocking' after send size")
            return SendNode(target, size, blocking, handle,
                            self.comments_since(start), pos)

        if word == "recv":
            self.advance()
            self.expect_keyword("from")
            source = self.parse_target()
            self.expect_keyword("size")
            size = self.parse_expr()
            return RecvNode(source, size, self.comments_since(start), pos)

        if word == "wait":
            self.advance()
            handle = self.expect("IDENT", "a handle name").text
            return WaitNode(handle, self.comments_since(start), pos)

        if word == "collective":
            self.advance()
            kind_tok = self.expect("IDENT", "a collective kind")
            if kind_tok.text not in COLLECTIVE_KINDS:
                self.fail(f"unknown collective kind '{kind_tok.text}'", kind_tok)
            self.expect_keyword("root")
            root = self.expect("IDENT", "a role name").text
            self.expect_keyword("size")
            size = self.parse_expr()
            return CollectiveNode(kind_tok.text, root, size,
                                  self.comments_since(start), pos)

        if word == "loop":
            self.advance()
            count = self.parse_expr()
            self.expect("LBRACE", "'{'")
            note = self.comments_since(start)
            return LoopNode(count, self.block_body(), note, pos)

        if word == "taskpool":
            self.advance()
            self.expect_keyword("count")
            count = self.parse_expr()
            self.expect_keyword("cost")
            cost: Expr | tuple
            if self.peek().type == "LBRACKET":
                self.advance()
                items = [self.parse_expr()]
                while self.peek().type == "COMMA":
                    self.advance()
                    items.append(self.parse_expr())
                self.expect("RBRACKET", "']'")
                cost = tuple(items)
            else:
                cost = self.parse_expr()
            self.expect_keyword("policy")
            policy_tok = self.advance()
            if policy_tok.text not in ("static", "dynamic"):
                self.fail("policy must be static or dynamic", policy_tok)
            self.expect_keyword("payload")
            payload = self.parse_expr()
            self.expect_keyword("result")
            result = self.parse_expr()
            return TaskPoolNode(count, cost, policy_tok.text, payload, result,
                                self.comments_since(start), pos)

        if word == "workerloop":
            self.advance()
            return WorkerLoopNode(self.comments_since(start), pos)

        self.fail(f"unknown keyword '{word}' in flow", tok)

    def parse_target(self) -> Target:
        role = self.expect("IDENT", "a role name").text
        index = None
        if self.peek().type == "DOT":
            self.advance()
            index = self.parse_expr()
        return Target(role, index)

    # -- expressions ---------------------------------------------------------

    def parse_expr(self) -> Expr:
        expr = self.parse_term()
        while self.peek().type in ("PLUS", "MINUS"):
            op = "+" if self.advance().type == "PLUS" else "-"
            expr = BinOp(op, expr, self.parse_term())
        return expr

    def parse_term(self) -> Expr:
        expr = self.parse_factor()
        while self.peek().type in ("STAR", "SLASH"):
            op = "*" if self.advance().type == "STAR" else "/"
            expr = BinOp(op, expr, self.parse_factor())
        return expr

    def parse_factor(self) -> Expr:
        tok = self.peek()
        if tok.type == "NUMBER":
            self.advance()
            return Num(tok.value if tok.value is not None else float(tok.text))
        if tok.type == "IDENT":
            self.advance()
            return Name(tok.text)
        if tok.type == "KEYWORD" and tok.text == "me":
            self.advance()
            return MeVar()
        if tok.type == "LPAREN":
            self.advance()
            expr = self.parse_expr()
            self.expect("RPAREN", "')'")
            return expr
        if tok.type == "MINUS":
            self.advance()
            return Neg(self.parse_factor())
        self.fail(f"malformed expression: unexpected '{tok.text or tok.type}'", tok)

    # -- post-parse checks -----------------------------------------------------

    def check_bound_names(self, model: Model) -> None:
        """Every Name in any expression must be a declared param."""
        unbound: list[tuple[str, tuple]] = []

        def scan(expr, pos) -> None:
            if isinstance(expr, Name) and expr.ident not in model.params:
                unbound.append((expr.ident, pos))
            elif isinstance(expr, Neg):
                scan(expr.operand, pos)
            elif isinstance(expr, BinOp):
                scan(expr.left, pos)
                scan(expr.right, pos)

        for arg in model.topology.args:
            scan(arg, model.topology.pos or (1, 1))
        scan(model.costs.t_startup, (1, 1))
        scan(model.costs.t_byte, (1, 1))
        for role in model.roles:
            rpos = role.pos or (1, 1)
            scan(role.low, rpos)
            if role.high is not None:
                scan(role.high, rpos)
            for node in walk(role.flow):
                npos = node.pos or rpos
                for expr in _node_exprs(node):
                    scan(expr, npos)

        for ident, pos in unbound:
            self.diagnostics.append(Diagnostic(
                "error", f"unbound param '{ident}'", pos[0], pos[1]))
        if unbound:
            raise _Abort


def _node_exprs(node):
    if isinstance(node, ActionNode):
        return [node.cost]
    if isinstance(node, SendNode):
        return [node.size] + ([node.target.index] if node.target.index else [])
    if isinstance(node, RecvNode):
        return [node.size] + ([node.source.index] if node.source.index else [])
    if isinstance(node, CollectiveNode):
        return [node.size]
    if isinstance(node, LoopNode):
        return [node.count]
    if isinstance(node, TaskPoolNode):
        costs = list(node.cost) if isinstance(node.cost, tuple) else [node.cost]
        return [node.count, node.payload, node.result] + costs
    return []


def parse_model(source: str) -> ParseResult:
    """Parse model text; on failure the result carries >= 1 error diagnostic."""
    try:
        tokens = tokenize(source)
    except LexError as exc:
        return ParseResult(None, [exc.diagnostic])
    parser = _Parser(tokens)
    try:
        model = parser.parse_model()
    except _Abort:
        return ParseResult(None, parser.diagnostics)
    return ParseResult(model, parser.diagnostics)


# ---------------------------------------------------------------------------
# Canonical printing
# ---------------------------------------------------------------------------

def _format_target(target: Target) -> str:
    if target.index is None:
        return target.role
    return f"{target.role}.{format_expr(target.index)}"


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _note_suffix(node) -> str:
    return f"  # {node.note}" if node.note else ""


def _print_node(node, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if isinstance(node, ActionNode):
        out.append(f"{pad}action {_quote(node.name)} cost "
                   f"{format_expr(node.cost)}{_note_suffix(node)}")
    elif isinstance(node, SubactivityNode):
        out.append(f"{pad}subactivity {_quote(node.name)} {{{_note_suffix(node)}")
        for child in node.body:
            _print_node(child, indent + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(node, SendNode):
        mode = "blocking" if node.blocking else "nonblocking"
        if not node.blocking and node.handle:
            mode += f" as {node.handle}"
        out.append(f"{pad}send to {_format_target(node.target)} size "
                   f"{format_expr(node.size)} {mode}{_note_suffix(node)}")
    elif isinstance(node, RecvNode):
        out.append(f"{pad}recv from {_format_target(node.source)} size "
                   f"{format_expr(node.size)}{_note_suffix(node)}")
    elif isinstance(node, WaitNode):
        out.append(f"{pad}wait {node.handle}{_note_suffix(node)}")
    elif isinstance(node, CollectiveNode):
        out.append(f"{pad}collective {node.kind} root {node.root} size "
                   f"{format_expr(node.size)}{_note_suffix(node)}")
    elif isinstance(node, LoopNode):
        out.append(f"{pad}loop {format_expr(node.count)} {{{_note_suffix(node)}")
        for child in node.body:
            _print_node(child, indent + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(node, TaskPoolNode):
        if isinstance(node.cost, tuple):
            cost = "[" + ", ".join(format_expr(c) for c in node.cost) + "]"
        else:
            cost = format_expr(node.cost)
        out.append(f"{pad}taskpool count {format_expr(node.count)} cost {cost} "
                   f"policy {node.policy} payload {format_expr(node.payload)} "
                   f"result {format_expr(node.result)}{_note_suffix(node)}")
    elif isinstance(node, WorkerLoopNode):
        out.append(f"{pad}workerloop{_note_suffix(node)}")
    else:
        raise ValueError(f"cannot print node {node!r}")


def print_model(model: Model) -> str:
    """Render a Model as canonical .pmod text (a parse -> print fixpoint)."""
    out: list[str] = [f"model {_quote(model.name)}", ""]
    args = ", ".join(format_expr(a) for a in model.topology.args)
    out.append(f"topology {model.topology.kind}({args})")

    if model.costs != CostDecl():
        out.append("")
        out.append("costs {")
        out.append(f"  t_startup = {format_expr(model.costs.t_startup)}")
        out.append(f"  t_byte = {format_expr(model.costs.t_byte)}")
        out.append(f"  hop_scaling = {'true' if model.costs.hop_scaling else 'false'}")
        out.append(f"  send_mode = {model.costs.send_mode}")
        out.append("}")

    if model.params:
        out.append("")
        out.append("params {")
        for name, value in model.params.items():
            out.append(f"  {name} = {format_number(value)}")
        out.append("}")

    for role in model.roles:
        out.append("")
        if role.high is None:
            spec = f"rank {format_expr(role.low)}"
        else:
            spec = f"ranks {format_expr(role.low)} .. {format_expr(role.high)}"
        out.append(f"role {role.name} on {spec} {{")
        for node in role.flow:
            _print_node(node, 1, out)
        out.append("}")

    return "\n".join(out) + "\n"
