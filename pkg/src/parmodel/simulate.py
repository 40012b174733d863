"""Deterministic discrete-event execution of a resolved model.

Each rank interprets its role's flow on a private clock; a central
matching engine resolves point-to-point messages (FIFO per ordered rank
pair), collectives, and taskpool episodes.  Completion times are
monotone functions (max / + / sum) of their inputs, so the result does
not depend on the order in which ranks are advanced; the engine sweeps
ranks round-robin until quiescence.

Timing rules (times in µs, sizes in bytes):

* action             occupies its rank for eval(cost) of compute time.
* C(L)               = t_startup + L * t_byte, multiplied by the shortest
                       hop count when hop_scaling is on (bus: one hop).
* blocking send      rendezvous: both sides resume at max(ready_s, ready_r)
                       + C(L).  buffered: sender resumes after C(L); the
                       receiver has the data at post + C(L).
* nonblocking send   sender continues immediately; the transfer runs at
                       max(post, recv_ready) + C(L); `wait h` blocks until
                       that completion.
* collective         over all p ranks with payload L: bcast/reduce cost
                       ceil(log2 p) * C(L); barrier ceil(log2 p) * t_startup;
                       gather/scatter sum C(L_i) over non-root ranks.  All
                       participants exit together, starting when the last
                       one arrives.
* taskpool static    tasks pre-partitioned into contiguous blocks across
                       workers; no payload/result messages.
* taskpool dynamic   master dispatches in declaration order to the first
                       idle worker (ties: lowest rank); payload/result are
                       buffered point-to-point messages.

Per-rank accounting: compute counts action/task execution, comm counts
transfer intervals the rank's clock passes through, idle is every wait,
including the tail until the global makespan.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field

from .errors import EvalError, SimulationError
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
    eval_count,
    eval_expr,
    walk,
)
from .model import CostModel
from .resolve import ResolvedModel, resolve_model

EVENT_KINDS = (
    "action_start", "action_end", "send_start", "send_end",
    "recv_start", "recv_end", "collective_start", "collective_end",
    "task_assign", "task_done", "deadlock",
)
_KIND_ORDER = {kind: i for i, kind in enumerate(EVENT_KINDS)}


@dataclass
class Event:
    time: float
    rank: int
    kind: str
    detail: str = ""
    peer: int | None = None
    size: float | None = None
    label: str | None = None
    sync: str | None = None   # synchronous | asynchronous (send_end only)
    group: int | None = None  # collective episode id


@dataclass(frozen=True)
class Trace:
    events: tuple
    final_time: float

    def serialize(self) -> str:
        """One event per line: time, rank, kind, detail (tab-separated)."""
        lines = [f"{e.time:.3f}\t{e.rank}\t{e.kind}\t{e.detail}"
                 for e in self.events]
        return "\n".join(lines) + ("\n" if lines else "")


@dataclass(frozen=True)
class RunMetrics:
    compute: tuple     # per-rank µs
    comm: tuple
    idle: tuple
    makespan: float
    message_count: int
    bytes_sent: float

    @property
    def p(self) -> int:
        return len(self.compute)


@dataclass(frozen=True)
class RunResult:
    trace: Trace
    metrics: RunMetrics
    resolved: ResolvedModel


@dataclass(frozen=True)
class BlockedRank:
    rank: int
    since: float
    reason: str
    waits_on: tuple  # ranks this one is waiting for


@dataclass(frozen=True)
class DeadlockReport:
    time: float
    blocked: tuple      # BlockedRank entries, ascending rank
    cycle: tuple | None  # ranks forming a wait-for cycle, or None
    kind: str            # "cycle" | "orphan wait"
    trace: Trace

    def describe(self) -> str:
        lines = [f"deadlock detected at t={self.time:.3f}µs ({self.kind})"]
        if self.cycle:
            arrows = " -> ".join(f"P{r}" for r in self.cycle)
            lines.append(f"wait-for cycle: {arrows} -> P{self.cycle[0]}")
        for b in self.blocked:
            lines.append(f"  P{b.rank} blocked since {b.since:.3f}µs on {b.reason}")
        return "\n".join(lines)


def detect_deadlock_state(blocked: list, edges: dict,
                          trace: Trace | None = None) -> "DeadlockReport":
    """Classify a quiescent blocked set.

    `blocked` holds BlockedRank entries, `edges` maps rank -> ranks it
    waits on.  The report lists every blocked rank with the node it
    blocks on, plus a wait-for cycle when one exists (otherwise the
    blocked ranks are waiting on terminated peers: an orphan wait).
    """
    blocked_set = {b.rank for b in blocked}
    cycle = None
    color: dict[int, int] = {}
    stack: list[int] = []

    def dfs(node: int):
        nonlocal cycle
        color[node] = 1
        stack.append(node)
        for nxt in edges.get(node, ()):
            if nxt not in blocked_set:
                continue
            if color.get(nxt, 0) == 1:
                cycle = tuple(stack[stack.index(nxt):])
                return True
            if color.get(nxt, 0) == 0 and dfs(nxt):
                return True
        stack.pop()
        color[node] = 2
        return False

    for b in blocked:
        if color.get(b.rank, 0) == 0 and dfs(b.rank):
            break
    return DeadlockReport(
        time=max((b.since for b in blocked), default=0.0),
        blocked=tuple(sorted(blocked, key=lambda b: b.rank)),
        cycle=cycle,
        kind="cycle" if cycle else "orphan wait",
        trace=trace if trace is not None else Trace(events=(), final_time=0.0),
    )


# ---------------------------------------------------------------------------
# Engine internals
# ---------------------------------------------------------------------------

READY, BLOCKED, DONE = 0, 1, 2


@dataclass
class _Frame:
    nodes: tuple
    idx: int = 0
    remaining: int = 0  # loop iterations left after the current one


@dataclass
class _Transfer:
    src: int
    dst: int
    size: float
    post: float
    cost: float
    label: str
    start: float | None = None
    end: float | None = None
    waiter: int | None = None


@dataclass
class _RankState:
    rank: int
    frames: list
    clock: float = 0.0
    status: int = READY
    block_kind: str = ""
    block_info: dict = field(default_factory=dict)
    block_since: float = 0.0
    compute: float = 0.0
    comm: float = 0.0
    idle: float = 0.0
    coll_idx: int = 0
    pool_idx: int = 0
    wl_idx: int = 0
    handles: dict = field(default_factory=dict)  # name -> deque[_Transfer]
    fan: deque = field(default_factory=deque)    # pending fan-out endpoints


class _Engine:
    def __init__(self, resolved: ResolvedModel):
        self.r = resolved
        self.costs: CostModel = resolved.costs
        self.p = resolved.p
        self.events: list[Event] = []
        self.seq = 0
        self.states = [
            _RankState(rank, [_Frame(resolved.flow_of(rank))])
            for rank in range(self.p)
        ]
        self.channels: dict = {}      # (src, dst) -> deque of entries
        self.recv_wait: dict = {}     # (src, dst) -> (receiver state, node)
        self.collectives: dict = {}   # index -> arrival info
        self.episodes: dict = {}      # index -> taskpool episode info
        self.worker_ranks = sorted(
            rank for rank in range(self.p)
            if any(isinstance(n, WorkerLoopNode)
                   for n in walk(resolved.flow_of(rank))))
        self.message_count = 0
        self.bytes_sent = 0.0

    # -- helpers -------------------------------------------------------------

    def emit(self, time: float, rank: int, kind: str, detail: str = "",
             **extra) -> None:
        self.seq += 1
        self.events.append(Event(time, rank, kind, detail, **extra))

    def cost_of(self, size: float, src: int, dst: int) -> float:
        hops = self.r.graph.shortest_hops(src, dst) if self.costs.hop_scaling else 1
        return self.costs.message_cost(size, hops)

    def evaluate(self, expr, me: int) -> float:
        try:
            return eval_expr(expr, self.r.params, me)
        except EvalError as exc:
            raise SimulationError(f"rank {me}: {exc}") from exc

    def role_name(self, rank: int) -> str:
        return self.r.rank_role[rank].name

    def channel(self, src: int, dst: int) -> deque:
        return self.channels.setdefault((src, dst), deque())

    def record_message(self, size: float) -> None:
        self.message_count += 1
        self.bytes_sent += size

    # -- main loop -------------------------------------------------------------

    def run(self):
        while True:
            progress = False
            for state in self.states:
                if state.status == READY:
                    progress = self.advance(state) or progress
            if all(s.status == DONE for s in self.states):
                break
            if not progress:
                return self.deadlock()
        self.check_leftovers()
        return self.finish()

    def advance(self, state: _RankState) -> bool:
        stepped = False
        while state.status == READY:
            if state.fan:
                node, endpoint = state.fan.popleft()
                stepped = True
                if isinstance(node, SendNode):
                    self.send_one(state, node, endpoint)
                else:
                    self.recv_one(state, node, endpoint)
                continue
            node = self.next_node(state)
            if node is None:
                state.status = DONE
                return True
            stepped = True
            self.execute(state, node)
        return stepped

    def next_node(self, state: _RankState):
        while state.frames:
            frame = state.frames[-1]
            if frame.idx < len(frame.nodes):
                node = frame.nodes[frame.idx]
                frame.idx += 1
                return node
            if frame.remaining > 0:
                frame.remaining -= 1
                frame.idx = 0
                continue
            state.frames.pop()
        return None

    # -- node execution -----------------------------------------------------

    def execute(self, state: _RankState, node) -> None:
        if isinstance(node, ActionNode):
            cost = self.evaluate(node.cost, state.rank)
            self.emit(state.clock, state.rank, "action_start", node.name)
            state.clock += cost
            state.compute += cost
            self.emit(state.clock, state.rank, "action_end", node.name)
        elif isinstance(node, SubactivityNode):
            state.frames.append(_Frame(node.body))
        elif isinstance(node, LoopNode):
            count = self.count_of(node.count, state.rank)
            if count > 0:
                state.frames.append(_Frame(node.body, remaining=count - 1))
        elif isinstance(node, SendNode):
            self.exec_send(state, node)
        elif isinstance(node, RecvNode):
            self.exec_recv(state, node)
        elif isinstance(node, WaitNode):
            self.exec_wait(state, node)
        elif isinstance(node, CollectiveNode):
            self.exec_collective(state, node)
        elif isinstance(node, TaskPoolNode):
            self.exec_taskpool(state, node)
        elif isinstance(node, WorkerLoopNode):
            self.exec_workerloop(state, node)
        else:
            raise SimulationError(f"cannot execute node {node!r}")

    def count_of(self, expr, me: int) -> int:
        try:
            return eval_count(expr, self.r.params, me)
        except EvalError as exc:
            raise SimulationError(f"rank {me}: {exc}") from exc

    def targets_of(self, target, me: int) -> list[int]:
        try:
            return self.r.resolve_target(target, me)
        except EvalError as exc:
            raise SimulationError(f"rank {me}: {exc}") from exc

    def exec_send(self, state: _RankState, node: SendNode) -> None:
        # multi-rank targets fan out, one message per rank ascending; the
        # advance loop drains the queue so a blocked endpoint pauses the rest
        state.fan.extend((node, dst)
                         for dst in self.targets_of(node.target, state.rank))

    def send_one(self, state: _RankState, node: SendNode, dst: int) -> None:
        me = state.rank
        size = self.evaluate(node.size, me)
        cost = self.cost_of(size, me, dst)
        label = self.role_name(dst)
        self.emit(state.clock, me, "send_start",
                  f"to P{dst} {_fmt_size(size)}", peer=dst, size=size)
        if node.blocking and self.costs.send_mode == "rendezvous":
            entry = ("rdv", state, node, state.clock, size, cost, label)
            self.channel(me, dst).append(entry)
            self.block(state, "send", peer=dst,
                       reason=f"blocking send to P{dst}")
            self.try_match(me, dst)
        elif node.blocking:  # buffered
            state.comm += cost
            state.clock += cost
            self.emit(state.clock, me, "send_end",
                      f"to P{dst} {_fmt_size(size)}", peer=dst, size=size,
                      label=label, sync="asynchronous")
            self.record_message(size)
            self.channel(me, dst).append(("buf", state.clock, size))
            self.try_match(me, dst)
        else:
            transfer = _Transfer(me, dst, size, state.clock, cost, label)
            if node.handle:
                state.handles.setdefault(node.handle, deque()).append(transfer)
            self.channel(me, dst).append(("nb", transfer))
            self.try_match(me, dst)

    def exec_recv(self, state: _RankState, node: RecvNode) -> None:
        state.fan.extend((node, src)
                         for src in self.targets_of(node.source, state.rank))

    def recv_one(self, state: _RankState, node: RecvNode, src: int) -> None:
        me = state.rank
        key = (src, me)
        if key in self.recv_wait:
            raise SimulationError(
                f"rank {me} already has a pending recv from P{src}")
        self.emit(state.clock, me, "recv_start", f"from P{src}", peer=src)
        self.recv_wait[key] = (state, node)
        self.block(state, "recv", peer=src, reason=f"recv from P{src}")
        self.try_match(src, me)

    def try_match(self, src: int, dst: int) -> None:
        key = (src, dst)
        queue = self.channels.get(key)
        waiting = self.recv_wait.get(key)
        if not queue or waiting is None:
            return
        receiver, _node = waiting
        entry = queue.popleft()
        del self.recv_wait[key]
        r_ready = receiver.block_since

        if entry[0] == "rdv":
            _, sender, _snode, s_ready, size, cost, label = entry
            start = max(s_ready, r_ready)
            end = start + cost
            sender.idle += start - s_ready
            sender.comm += cost
            sender.clock = end
            self.emit(end, src, "send_end",
                      f"to P{dst} {_fmt_size(size)}", peer=dst, size=size,
                      label=label, sync="synchronous")
            self.record_message(size)
            self.unblock(sender)
            receiver.idle += start - r_ready
            receiver.comm += cost
            receiver.clock = end
        elif entry[0] == "buf":
            _, arrival, size = entry
            end = max(arrival, r_ready)
            receiver.idle += end - r_ready
            receiver.clock = end
        else:  # nonblocking transfer
            transfer = entry[1]
            start = max(transfer.post, r_ready)
            end = start + transfer.cost
            transfer.start, transfer.end = start, end
            self.emit(end, src, "send_end",
                      f"to P{dst} {_fmt_size(transfer.size)}", peer=dst,
                      size=transfer.size, label=transfer.label,
                      sync="asynchronous")
            self.record_message(transfer.size)
            receiver.idle += start - r_ready
            receiver.comm += transfer.cost
            receiver.clock = end
            size = transfer.size
            if transfer.waiter is not None:
                self.resolve_wait(self.states[transfer.waiter], transfer)

        self.emit(receiver.clock, dst, "recv_end",
                  f"from P{src} {_fmt_size(size)}", peer=src, size=size)
        self.unblock(receiver)

    def exec_wait(self, state: _RankState, node: WaitNode) -> None:
        queue = state.handles.get(node.handle)
        if not queue:
            raise SimulationError(
                f"rank {state.rank}: wait on handle '{node.handle}' with no "
                f"outstanding transfer")
        transfer = queue.popleft()
        if transfer.end is not None:
            self.apply_wait_time(state, transfer)
        else:
            transfer.waiter = state.rank
            self.block(state, "wait", transfer=transfer,
                       reason=f"wait '{node.handle}' on send to P{transfer.dst}")

    def apply_wait_time(self, state: _RankState, transfer: _Transfer) -> None:
        if transfer.end > state.clock:
            overlap = transfer.end - max(state.clock, transfer.start)
            overlap = max(0.0, min(overlap, transfer.end - state.clock))
            state.idle += (transfer.end - state.clock) - overlap
            state.comm += overlap
            state.clock = transfer.end

    def resolve_wait(self, state: _RankState, transfer: _Transfer) -> None:
        self.apply_wait_time(state, transfer)
        self.unblock(state)

    def exec_collective(self, state: _RankState, node: CollectiveNode) -> None:
        idx = state.coll_idx
        state.coll_idx += 1
        episode = self.collectives.setdefault(
            idx, {"kind": node.kind, "root": node.root, "arrivals": {}})
        if episode["kind"] != node.kind or episode["root"] != node.root:
            raise SimulationError(
                f"collective mismatch at position {idx}: rank {state.rank} "
                f"performs {node.kind} root {node.root}, expected "
                f"{episode['kind']} root {episode['root']}")
        size = self.evaluate(node.size, state.rank)
        episode["arrivals"][state.rank] = (state.clock, size)
        self.emit(state.clock, state.rank, "collective_start",
                  f"{node.kind} root {node.root} {_fmt_size(size)}",
                  size=size, group=idx)
        self.block(state, "collective", idx=idx,
                   reason=f"collective {node.kind}")
        if len(episode["arrivals"]) == self.p:
            self.resolve_collective(idx, node)

    def resolve_collective(self, idx: int, node: CollectiveNode) -> None:
        episode = self.collectives[idx]
        arrivals = episode["arrivals"]
        start = max(t for t, _ in arrivals.values())
        root = self.r.root_rank(node.root)
        g = self.p
        rounds = math.ceil(math.log2(g)) if g > 1 else 0
        if node.kind in ("bcast", "reduce"):
            cost = rounds * self.costs.message_cost(arrivals[root][1])
        elif node.kind == "barrier":
            cost = rounds * self.costs.t_startup
        else:  # gather / scatter: linear bottleneck at the root
            cost = sum(self.costs.message_cost(arrivals[rank][1])
                       for rank in arrivals if rank != root)
        end = start + cost
        root_size = arrivals[root][1]
        for rank, (arrived, _size) in sorted(arrivals.items()):
            state = self.states[rank]
            state.idle += start - arrived
            state.comm += cost
            state.clock = end
            self.emit(end, rank, "collective_end",
                      f"{node.kind} root {node.root}", group=idx,
                      size=root_size, label=node.kind)
            self.unblock(state)

    # -- taskpool ----------------------------------------------------------------

    def exec_taskpool(self, state: _RankState, node: TaskPoolNode) -> None:
        idx = state.pool_idx
        state.pool_idx += 1
        me = state.rank
        if not self.worker_ranks:
            raise SimulationError(
                "taskpool requires at least one rank with a workerloop")
        count = self.count_of(node.count, me)
        if isinstance(node.cost, tuple):
            if len(node.cost) != count:
                raise SimulationError(
                    f"taskpool cost list has {len(node.cost)} entries "
                    f"for count {count}")
            costs = [self.evaluate(c, me) for c in node.cost]
        else:
            costs = [self.evaluate(node.cost, me)] * count
        episode = self.episodes.setdefault(idx, {"workers": {}})
        episode.update({
            "master": me,
            "master_time": state.clock,
            "node": node,
            "costs": costs,
            "payload": self.evaluate(node.payload, me),
            "result": self.evaluate(node.result, me),
        })
        if node.policy == "static":
            self.resolve_static_pool(idx, state)
        else:
            self.block(state, "taskpool", idx=idx,
                       reason=f"taskpool ({count} tasks)")
            self.maybe_run_dynamic(idx)

    def exec_workerloop(self, state: _RankState, node: WorkerLoopNode) -> None:
        idx = state.wl_idx
        state.wl_idx += 1
        episode = self.episodes.setdefault(idx, {"workers": {}})
        episode["workers"][state.rank] = state.clock
        self.block(state, "workerloop", idx=idx, reason="workerloop")
        if "master" in episode:
            node_ = episode["node"]
            if node_.policy == "static":
                self.run_static_worker(idx, state)
            else:
                self.maybe_run_dynamic(idx)

    def static_assignment(self, idx: int) -> dict:
        """Contiguous blocks of declaration-order tasks across workers."""
        episode = self.episodes[idx]
        n = len(episode["costs"])
        workers = self.worker_ranks
        w = len(workers)
        base, extra = divmod(n, w)
        assignment: dict[int, list[int]] = {}
        cursor = 0
        for j, rank in enumerate(workers):
            size = base + (1 if j < extra else 0)
            assignment[rank] = list(range(cursor, cursor + size))
            cursor += size
        return assignment

    def resolve_static_pool(self, idx: int, master: _RankState) -> None:
        episode = self.episodes[idx]
        episode["assignment"] = self.static_assignment(idx)
        for rank in self.worker_ranks:
            for task in episode["assignment"][rank]:
                self.emit(master.clock, master.rank, "task_assign",
                          f"task {task} -> P{rank}")
        # master does not block: partitioning happens up front
        for rank, _arrived in sorted(episode["workers"].items()):
            state = self.states[rank]
            if state.status == BLOCKED and state.block_kind == "workerloop" \
                    and state.block_info.get("idx") == idx:
                self.run_static_worker(idx, state)

    def run_static_worker(self, idx: int, state: _RankState) -> None:
        episode = self.episodes[idx]
        if "assignment" not in episode:
            return  # master has not reached the taskpool yet
        for task in episode["assignment"].get(state.rank, []):
            cost = episode["costs"][task]
            state.clock += cost
            state.compute += cost
            self.emit(state.clock, state.rank, "task_done", f"task {task}")
        self.unblock(state)

    def maybe_run_dynamic(self, idx: int) -> None:
        episode = self.episodes[idx]
        if "master" not in episode:
            return
        if set(self.worker_ranks) - set(episode["workers"]):
            return  # some worker has not reached its workerloop yet
        master = self.states[episode["master"]]
        costs = episode["costs"]
        payload, result = episode["payload"], episode["result"]
        m_rank = master.rank
        m_clock = episode["master_time"]
        free = dict(episode["workers"])  # worker -> ready time for next payload
        pending = list(range(len(costs)))
        in_flight: list = []

        def dispatch(task: int, worker: int) -> None:
            nonlocal m_clock
            w_state = self.states[worker]
            cp = self.cost_of(payload, m_rank, worker)
            cr = self.cost_of(result, worker, m_rank)
            self.emit(m_clock, m_rank, "task_assign", f"task {task} -> P{worker}")
            self.emit(m_clock, m_rank, "send_start",
                      f"to P{worker} {_fmt_size(payload)}", peer=worker,
                      size=payload)
            master.comm += cp
            m_clock += cp
            self.emit(m_clock, m_rank, "send_end",
                      f"to P{worker} {_fmt_size(payload)}", peer=worker,
                      size=payload, label=f"task{task}", sync="asynchronous")
            self.record_message(payload)
            arrival = m_clock
            ready = free[worker]
            self.emit(ready, worker, "recv_start", f"from P{m_rank}", peer=m_rank)
            start = max(arrival, ready)
            self.emit(start, worker, "recv_end",
                      f"from P{m_rank} {_fmt_size(payload)}", peer=m_rank,
                      size=payload)
            w_state.idle += start - ready
            done = start + costs[task]
            w_state.compute += costs[task]
            self.emit(done, worker, "task_done", f"task {task}")
            self.emit(done, worker, "send_start",
                      f"to P{m_rank} {_fmt_size(result)}", peer=m_rank,
                      size=result)
            w_state.comm += cr
            sent = done + cr
            self.emit(sent, worker, "send_end",
                      f"to P{m_rank} {_fmt_size(result)}", peer=m_rank,
                      size=result, label=f"result{task}", sync="asynchronous")
            self.record_message(result)
            free[worker] = sent
            heapq.heappush(in_flight, (sent, worker, task))

        for worker in self.worker_ranks:
            if not pending:
                break
            dispatch(pending.pop(0), worker)

        while in_flight:
            arrival, worker, task = heapq.heappop(in_flight)
            self.emit(m_clock, m_rank, "recv_start", f"from P{worker}",
                      peer=worker)
            gap = max(0.0, arrival - m_clock)
            master.idle += gap
            m_clock = max(m_clock, arrival)
            self.emit(m_clock, m_rank, "recv_end",
                      f"from P{worker} {_fmt_size(result)}", peer=worker,
                      size=result)
            if pending:
                dispatch(pending.pop(0), worker)

        master.clock = m_clock
        self.unblock(master)
        for worker in self.worker_ranks:
            w_state = self.states[worker]
            w_state.clock = free[worker]
            self.unblock(w_state)

    # -- blocking bookkeeping -----------------------------------------------------

    def block(self, state: _RankState, kind: str, reason: str, **info) -> None:
        state.status = BLOCKED
        state.block_kind = kind
        state.block_info = dict(info, reason=reason)
        state.block_since = state.clock

    def unblock(self, state: _RankState) -> None:
        state.status = READY
        state.block_kind = ""
        state.block_info = {}

    # -- termination --------------------------------------------------------------

    def check_leftovers(self) -> None:
        for (src, dst), queue in sorted(self.channels.items()):
            if queue:
                raise SimulationError(
                    f"unmatched message from P{src} to P{dst} remaining "
                    f"at end of simulation")

    def wait_edges(self, state: _RankState) -> tuple:
        kind, info = state.block_kind, state.block_info
        if kind in ("send", "recv"):
            return (info["peer"],)
        if kind == "wait":
            return (info["transfer"].dst,)
        if kind == "collective":
            arrived = set(self.collectives[info["idx"]]["arrivals"])
            return tuple(r for r in range(self.p) if r not in arrived)
        if kind in ("taskpool", "workerloop"):
            episode = self.episodes[info["idx"]]
            present = set(episode["workers"])
            if "master" in episode:
                present.add(episode["master"])
            return tuple(r for r in range(self.p)
                         if r != state.rank and r not in present)
        return ()

    def deadlock(self) -> DeadlockReport:
        blocked = []
        edges: dict[int, tuple] = {}
        for state in self.states:
            if state.status == BLOCKED:
                edges[state.rank] = self.wait_edges(state)
                blocked.append(BlockedRank(
                    rank=state.rank,
                    since=state.block_since,
                    reason=state.block_info.get("reason", state.block_kind),
                    waits_on=edges[state.rank]))
        for b in blocked:
            self.emit(b.since, b.rank, "deadlock", f"blocked on {b.reason}")
        return detect_deadlock_state(blocked, edges, trace=self.build_trace())

    def build_trace(self) -> Trace:
        ordered = sorted(
            enumerate(self.events),
            key=lambda pair: (pair[1].time, pair[1].rank,
                              _KIND_ORDER[pair[1].kind], pair[0]))
        events = tuple(e for _, e in ordered)
        final = events[-1].time if events else 0.0
        return Trace(events=events, final_time=final)

    def finish(self) -> RunResult:
        trace = self.build_trace()
        makespan = max([trace.final_time] + [s.clock for s in self.states])
        for state in self.states:
            state.idle += makespan - state.clock
        metrics = RunMetrics(
            compute=tuple(s.compute for s in self.states),
            comm=tuple(s.comm for s in self.states),
            idle=tuple(s.idle for s in self.states),
            makespan=makespan,
            message_count=self.message_count,
            bytes_sent=self.bytes_sent,
        )
        return RunResult(trace=trace, metrics=metrics, resolved=self.r)


def run(model: Model, params: dict | None = None,
        costs: CostModel | None = None):
    """Simulate a model; returns RunResult or DeadlockReport.

    `params` shadow file-level params; `costs` replaces the model's cost
    declaration (used by sweeps).  Raises SimulationError for unmatched
    messages or unevaluable expressions.
    """
    resolved = resolve_model(model, params, costs)
    return run_resolved(resolved)


def run_resolved(resolved: ResolvedModel):
    return _Engine(resolved).run()


def _fmt_size(size: float) -> str:
    if size == int(size):
        return f"{int(size)}B"
    return f"{size}B"
