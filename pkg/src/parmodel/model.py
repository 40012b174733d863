"""Core domain types: process topologies, cost parameters, and graph queries.

Ranks are 0-based. Every topology builder uses a fixed rank numbering so
that two builds of the same spec produce identical adjacency:

* farm / star   -- master is rank 0, leaves 1..p-1
* ring          -- ranks laid out in cycle order
* mesh2d        -- row-major, rank = row * cols + col
* hypercube     -- binary labels, ranks differing in one bit are adjacent
* tree          -- breadth-first from root 0 (children of i: a*i+1 .. a*i+a)
* bus           -- shared medium; realized as a complete graph with the
                   medium flag set, so every pair is one hop apart
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import TopologyError

TOPOLOGY_KINDS = ("farm", "bus", "star", "ring", "mesh2d", "hypercube", "tree")

SEND_MODES = ("rendezvous", "buffered")


@dataclass(frozen=True)
class TopologySpec:
    """A named regular interconnection with concrete shape parameters."""

    kind: str
    p: int
    rows: int | None = None
    cols: int | None = None
    dim: int | None = None
    arity: int | None = None
    depth: int | None = None

    @staticmethod
    def from_args(kind: str, args: list[int]) -> "TopologySpec":
        """Build a spec from positional DSL arguments.

        farm/bus/star/ring take (p); mesh2d takes (rows, cols);
        hypercube takes (dim); tree takes (arity, depth).
        """
        def need(n: int) -> None:
            if len(args) != n:
                raise TopologyError(
                    f"topology {kind} takes {n} argument(s), got {len(args)}")

        if kind in ("farm", "bus", "star", "ring"):
            need(1)
            return TopologySpec(kind, args[0])
        if kind == "mesh2d":
            need(2)
            rows, cols = args
            return TopologySpec(kind, rows * cols, rows=rows, cols=cols)
        if kind == "hypercube":
            need(1)
            dim = args[0]
            return TopologySpec(kind, 2 ** dim, dim=dim)
        if kind == "tree":
            need(2)
            arity, depth = args
            if arity == 1:
                p = depth + 1
            else:
                p = (arity ** (depth + 1) - 1) // (arity - 1)
            return TopologySpec(kind, p, arity=arity, depth=depth)
        raise TopologyError(f"unknown topology kind '{kind}'")


@dataclass(frozen=True)
class ProcessGraph:
    """Undirected rank graph realizing one TopologySpec."""

    p: int
    adjacency: tuple[tuple[int, ...], ...]
    medium: bool = False  # true only for bus: every pair is one hop
    _hops: dict = field(default_factory=dict, repr=False, compare=False)

    def neighbors(self, u: int) -> tuple[int, ...]:
        self._check_rank(u)
        return self.adjacency[u]

    def shortest_hops(self, u: int, v: int) -> int:
        self._check_rank(u)
        self._check_rank(v)
        if u == v:
            return 0
        if self.medium:
            return 1
        key = (u, v) if u < v else (v, u)
        cached = self._hops.get(key)
        if cached is None:
            cached = self._bfs(key[0], key[1])
            self._hops[key] = cached
        return cached

    def _bfs(self, src: int, dst: int) -> int:
        dist = {src: 0}
        queue = deque([src])
        while queue:
            node = queue.popleft()
            if node == dst:
                return dist[node]
            for nb in self.adjacency[node]:
                if nb not in dist:
                    dist[nb] = dist[node] + 1
                    queue.append(nb)
        raise TopologyError(f"no path between ranks {src} and {dst}")

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges as sorted (u, v) pairs, u < v, ascending."""
        out = []
        for u in range(self.p):
            for v in self.adjacency[u]:
                if u < v:
                    out.append((u, v))
        return out

    def _check_rank(self, u: int) -> None:
        if not 0 <= u < self.p:
            raise TopologyError(f"rank {u} out of range 0..{self.p - 1}")


@dataclass(frozen=True)
class CostModel:
    """Linear point-to-point message cost: C(L) = t_startup + L * t_byte.

    Times are microseconds, sizes bytes.  When hop_scaling is set the
    point-to-point cost is multiplied by the shortest hop count between
    the two ranks (always 1 on a bus).  send_mode selects how a blocking
    send completes: rendezvous waits for the matching receive, buffered
    returns after the local transfer.
    """

    t_startup: float = 0.0
    t_byte: float = 0.0
    hop_scaling: bool = False
    send_mode: str = "rendezvous"

    def __post_init__(self) -> None:
        if self.t_startup < 0 or self.t_byte < 0:
            raise ValueError("cost parameters must be non-negative")
        if self.send_mode not in SEND_MODES:
            raise ValueError(f"send_mode must be one of {SEND_MODES}")

    def message_cost(self, nbytes: float, hops: int = 1) -> float:
        base = self.t_startup + nbytes * self.t_byte
        return base * hops if self.hop_scaling else base


# Params is a plain mapping of unique names to finite non-negative scalars;
# see parser.check_params for the invariant enforcement.
Params = dict


def _edges_to_adjacency(p: int, edges: set[tuple[int, int]]) -> tuple[tuple[int, ...], ...]:
    adj: list[list[int]] = [[] for _ in range(p)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    return tuple(tuple(sorted(a)) for a in adj)


def build_topology(spec: TopologySpec) -> ProcessGraph:
    """Realize a TopologySpec as a ProcessGraph with fixed rank numbering."""
    kind, p = spec.kind, spec.p
    if p < 1:
        raise TopologyError(f"{kind} needs at least 1 process, got {p}")

    edges: set[tuple[int, int]] = set()
    medium = False

    if kind in ("farm", "star"):
        if p < 2:
            raise TopologyError(f"{kind} needs at least 2 processes, got {p}")
        edges = {(0, i) for i in range(1, p)}
    elif kind == "bus":
        medium = True
        edges = {(u, v) for u in range(p) for v in range(u + 1, p)}
    elif kind == "ring":
        if p < 3:
            raise TopologyError(f"ring needs at least 3 processes, got {p}")
        edges = {(i, (i + 1) % p) if i < (i + 1) % p else ((i + 1) % p, i)
                 for i in range(p)}
    elif kind == "mesh2d":
        rows, cols = spec.rows, spec.cols
        if rows is None or cols is None or rows < 1 or cols < 1:
            raise TopologyError("mesh2d needs positive rows and cols")
        if rows * cols != p:
            raise TopologyError(
                f"mesh2d shape {rows}×{cols}={rows * cols} ≠ process count {p}")
        for r in range(rows):
            for c in range(cols):
                rank = r * cols + c
                if c + 1 < cols:
                    edges.add((rank, rank + 1))
                if r + 1 < rows:
                    edges.add((rank, rank + cols))
    elif kind == "hypercube":
        dim = spec.dim
        if dim is None or dim < 0:
            raise TopologyError("hypercube needs a non-negative dimension")
        if 2 ** dim != p:
            raise TopologyError(f"hypercube size {p} is not 2^{dim}")
        for u in range(p):
            for bit in range(dim):
                v = u ^ (1 << bit)
                if u < v:
                    edges.add((u, v))
    elif kind == "tree":
        arity, depth = spec.arity, spec.depth
        if arity is None or depth is None or arity < 1 or depth < 0:
            raise TopologyError("tree needs arity >= 1 and depth >= 0")
        expected = depth + 1 if arity == 1 else (arity ** (depth + 1) - 1) // (arity - 1)
        if expected != p:
            raise TopologyError(
                f"tree(arity={arity}, depth={depth}) has {expected} nodes, not {p}")
        for child in range(1, p):
            parent = (child - 1) // arity
            edges.add((parent, child))
    else:
        raise TopologyError(f"unknown topology kind '{kind}'")

    return ProcessGraph(p=p, adjacency=_edges_to_adjacency(p, edges), medium=medium)


def shortest_hops(g: ProcessGraph, u: int, v: int) -> int:
    """Shortest path length between two ranks (1 for any bus pair, 0 if u == v)."""
    return g.shortest_hops(u, v)


def neighbors(g: ProcessGraph, u: int) -> tuple[int, ...]:
    """Neighbor ranks of u in ascending order."""
    return g.neighbors(u)
