"""Cycle-freeness tester: sparsify, then two rounds of prioritized multi-BFS.

Phase 1 runs on the sparsified graph with the lowest root id winning and
catches cycles in components of small diameter.  Each vertex is then renamed
``(deepest depth it saw, own id)`` and phase 2 runs on the original graph with
the lexicographically highest name winning.  A vertex rejects as soon as it
holds two distinct BFS tuples with the same root.

Wire format of a BFS message: ``(root, depth)``; the parent is the sender.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Sequence

from .graph import Graph, bfs_distances, from_edge_set
from .sim import (Message, SimConfig, Simulation, Transcript, VertexAlgorithm,
                  field_bits, id_bits)
from .triangle import as_fraction


def _log(n: int, base: float) -> float:
    if n <= 1:
        return 0.0
    if base == 2:
        return math.log2(n)
    if base == math.e:
        return math.log(n)
    return math.log(n) / math.log(base)


def _ceil(x: float) -> int:
    return math.ceil(x - 1e-9)


@dataclass(frozen=True)
class CycleParams:
    epsilon: Fraction
    log_base: float = 2
    force_no_deletion: bool = False

    def __post_init__(self):
        eps = as_fraction(self.epsilon)
        object.__setattr__(self, "epsilon", eps)
        if not 0 < eps <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if not self.log_base > 1:
            raise ValueError("log_base must exceed 1")

    @property
    def deletion_probability(self) -> float:
        return 0.0 if self.force_no_deletion else float(self.epsilon) / 2

    def phase1_length(self, n: int) -> int:
        """T = ceil(20 log n / epsilon), at least 2."""
        return max(2, _ceil(20 * _log(n, self.log_base) / float(self.epsilon)))

    def phase2_length(self, n: int) -> int:
        """T/2 = ceil(10 log n / epsilon), at least 1."""
        return max(1, _ceil(10 * _log(n, self.log_base) / float(self.epsilon)))

    def round_budget(self, n: int) -> int:
        return self.phase1_length(n) + self.phase2_length(n) + 3


# -- priorities -------------------------------------------------------------

def _negate(root):
    if isinstance(root, tuple):
        return tuple(-x for x in root)
    return -root


class PriorityCondition:
    """Total order on BFS roots; ``rank`` is smaller for the winner."""

    def __init__(self, name: str):
        if name not in ("lowest", "highest"):
            raise ValueError("priority must be 'lowest' or 'highest'")
        self.name = name

    def rank(self, entry: tuple) -> tuple:
        root, depth, parent = entry
        key = root if self.name == "lowest" else _negate(root)
        return (key, depth, parent)

    def __repr__(self):
        return f"PriorityCondition({self.name!r})"


LOWEST = PriorityCondition("lowest")
HIGHEST = PriorityCondition("highest")


class BfsState:
    """The tuple list ``L_v`` of one vertex during one prioritized BFS."""

    def __init__(self, vid: int, own_id: Hashable, priority: PriorityCondition):
        self.vid = vid
        self.priority = priority
        seed = (own_id, 0, vid)
        self.tuples: set[tuple] = {seed}
        self.by_root: dict = {own_id: seed}
        self.best = seed
        self.best_rank = priority.rank(seed)
        self.duplicate: tuple[tuple, tuple] | None = None

    def add(self, entry: tuple) -> None:
        if entry in self.tuples:
            return
        self.tuples.add(entry)
        first = self.by_root.get(entry[0])
        if first is None:
            self.by_root[entry[0]] = entry
        elif self.duplicate is None:
            self.duplicate = (first, entry)
        r = self.priority.rank(entry)
        if r < self.best_rank:
            self.best, self.best_rank = entry, r

    def max_depth(self) -> int:
        return max(t[1] for t in self.tuples)


def _bfs_sends(state: BfsState, neighbors: Sequence[int], bits: int) -> list:
    root, depth, parent = state.best
    msg = Message((root, depth + 1), bits)
    return [(u, msg) for u in neighbors if u != parent]


# -- standalone prioritized BFS ------------------------------------------------

class _BfsVertex(VertexAlgorithm):
    def __init__(self, vid, neighbors, rng, runner: "_BfsRunner"):
        super().__init__(vid, neighbors, rng)
        self.runner = runner
        self.state = BfsState(vid, runner.ids[vid], runner.priority)

    def on_round(self, rnd, inbox):
        length = self.runner.length
        if rnd == 0:
            self.wake_at = length + 1
            return [(u, Message((self.state.best[0], 1), self.runner.bits)) for u in self.neighbors]
        for sender, msg in inbox:
            root, depth = msg.payload
            self.state.add((root, depth, sender))
        if rnd > length:
            self.accept()
            self.halt()
            return []
        if not inbox:
            return []
        return _bfs_sends(self.state, self.neighbors, self.runner.bits)


class _BfsRunner:
    def __init__(self, g: Graph, length: int, priority: PriorityCondition, ids: Sequence,
                 root_bits: int):
        self.length = length
        self.priority = priority
        self.ids = ids
        self.bits = root_bits + field_bits(length + 1)

    def __call__(self, vid, neighbors, rng):
        return _BfsVertex(vid, neighbors, rng, self)


def bfs_states(g: Graph, length: int, priority: PriorityCondition,
               initial_ids: Sequence | None = None, cfg: SimConfig | None = None,
               root_bits: int | None = None) -> tuple[list[BfsState], Transcript]:
    """Run ``length`` forwarding rounds and return each vertex's final ``BfsState``.

    A final receive-only round folds the last forwarded tuples into the lists.
    """
    ids = list(range(g.n)) if initial_ids is None else list(initial_ids)
    if len(set(ids)) != len(ids):
        raise ValueError("initial ids must be distinct")
    if root_bits is None:
        root_bits = id_bits(g.n)
    runner = _BfsRunner(g, length, priority, ids, root_bits)
    sim = Simulation(g, runner, cfg)
    tr = sim.run()
    return [node.state for node in sim.nodes], tr


def prioritized_bfs(g: Graph, length: int, priority: PriorityCondition,
                    initial_ids: Sequence | None = None, cfg: SimConfig | None = None,
                    root_bits: int | None = None) -> tuple[list[set[tuple]], Transcript]:
    """Per-vertex tuple sets ``(root, depth, parent)`` after a prioritized BFS."""
    states, tr = bfs_states(g, length, priority, initial_ids, cfg, root_bits)
    return [st.tuples for st in states], tr


# -- sparsification --------------------------------------------------------------

def sparsify(g: Graph, p: float, rng: random.Random) -> tuple[Graph, set[tuple[int, int]]]:
    """Delete every edge independently with probability ``p``."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    deleted = {e for e in g.edges() if rng.random() < p}
    return g.without_edges(deleted), deleted


# -- the distributed tester --------------------------------------------------------

_MARK = Message(("delete",), 1)


class CycleVertex(VertexAlgorithm):
    def __init__(self, vid, neighbors, rng, tester: "CycleTester"):
        super().__init__(vid, neighbors, rng)
        self.t = tester
        self.sparse_neighbors: tuple[int, ...] = tuple(neighbors)
        self.deleted: set[int] = set()
        self.state: BfsState | None = None
        self.phase = 0
        self.reject_phase: int | None = None
        self.phase1_max_depth: int | None = None

    def _check(self):
        if self.state.duplicate is not None and self.reject_phase is None:
            self.reject_phase = self.phase
            self.reject()

    def on_round(self, rnd, inbox):
        t = self.t
        end1 = t.T + 2
        end2 = end1 + t.half + 1
        if rnd == 0:
            out = []
            p = t.params.deletion_probability
            for u in self.neighbors:
                if u < self.id and p > 0 and self.rng.random() < p:
                    self.deleted.add(u)
                    out.append((u, _MARK))
            self.wake_at = 1
            return out
        if rnd == 1:
            self.deleted.update(u for u, _ in inbox)
            self.sparse_neighbors = tuple(u for u in self.neighbors if u not in self.deleted)
            self.phase = 1
            self.state = BfsState(self.id, self.id, LOWEST)
            self.wake_at = end1
            return [(u, Message((self.id, 1), t.bits1)) for u in self.sparse_neighbors]

        for sender, msg in inbox:
            root, depth = msg.payload
            self.state.add((root, depth, sender))
        self._check()

        if rnd == end1:
            self.phase1_max_depth = self.state.max_depth()
            new_id = (self.phase1_max_depth, self.id)
            self.phase = 2
            self.state = BfsState(self.id, new_id, HIGHEST)
            self.wake_at = end2
            return [(u, Message((new_id, 1), t.bits2)) for u in self.neighbors]
        if rnd == end2:
            self.accept()
            self.halt()
            return []
        if not inbox:
            return []
        if self.phase == 1:
            return _bfs_sends(self.state, self.sparse_neighbors, t.bits1)
        return _bfs_sends(self.state, self.neighbors, t.bits2)


class CycleTester:
    name = "cycle"

    def __init__(self, g: Graph, params: CycleParams):
        self.params = params
        self.n = g.n
        self.T = params.phase1_length(g.n)
        self.half = params.phase2_length(g.n)
        ib = id_bits(g.n)
        self.bits1 = ib + field_bits(self.T + 1)
        self.bits2 = field_bits(self.T + 1) + ib + field_bits(self.half + 1)

    def __call__(self, vid, neighbors, rng):
        return CycleVertex(vid, neighbors, rng, self)

    def annotate(self, transcript: Transcript, nodes) -> None:
        phases = [x.reject_phase for x in nodes if x.reject_phase is not None]
        deleted = sum(len([u for u in x.deleted if u < x.id]) for x in nodes)
        transcript.extras.update(
            algorithm=self.name,
            epsilon=str(self.params.epsilon),
            log_base=self.params.log_base,
            phase1_length=self.T,
            phase2_length=self.half,
            round_budget=self.T + self.half + 3,
            deleted_edges=deleted,
            reject_phase=min(phases) if phases else None,
        )


def run_cycle_test(g: Graph, params: CycleParams, cfg: SimConfig | None = None) -> Transcript:
    return Simulation(g, CycleTester(g, params), cfg).run()


# -- post-hoc verification helpers ---------------------------------------------------

def _chain(states: list[BfsState], start: int, entry: tuple) -> list[tuple[int, int]]:
    """Edges of the walk that delivered ``entry`` to ``start``, traced back to its root."""
    edges = []
    here, (root, depth, parent) = start, entry
    while depth > 0:
        edges.append((here, parent))
        nxt = None
        for cand in states[parent].tuples:
            if cand[0] == root and cand[1] == depth - 1 and (cand[1] == 0 or cand[2] != here):
                nxt = cand
                break
        if nxt is None:
            raise AssertionError(f"broken BFS chain at vertex {parent} for root {root}")
        here, (root, depth, parent) = parent, nxt
    return edges


def duplicate_closed_walk(states: list[BfsState], v: int) -> list[tuple[int, int]]:
    """Edge multiset of the closed walk behind vertex ``v``'s duplicate root."""
    first, second = states[v].duplicate
    return _chain(states, v, first) + _chain(states, v, second)


def walk_contains_cycle(n: int, walk_edges: list[tuple[int, int]]) -> bool:
    from .oracles import find_cycle

    return find_cycle(from_edge_set(n, walk_edges)) is not None


def shortest_lasso(g: Graph, v: int) -> int | None:
    """Length of the shortest closed walk from ``v`` that contains a simple cycle.

    Every such walk is at least as long as ``d(a) + d(b) + 1`` for some edge
    ``ab`` outside a BFS tree rooted at ``v``, and each of those is realized.
    """
    dist = [-1] * g.n
    parent = [-1] * g.n
    dist[v] = 0
    queue = deque([v])
    while queue:
        u = queue.popleft()
        for w in g.adj[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                parent[w] = u
                queue.append(w)
    best = None
    for a, b in g.edges():
        if dist[a] < 0 or parent[a] == b or parent[b] == a:
            continue
        length = dist[a] + dist[b] + 1
        if best is None or length < best:
            best = length
    return best


@dataclass
class LassoReport:
    checked: int
    violations: list[int]


def lasso_check(g: Graph, sparse: Graph, far: int, limit: int) -> LassoReport:
    """Vertices of ``sparse`` with some vertex at distance >= ``far`` must lie
    on a closed walk of ``g`` of length <= ``limit`` that contains a cycle."""
    checked, bad = 0, []
    for v in range(sparse.n):
        ecc = max(bfs_distances(sparse, v))
        if ecc < far:
            continue
        checked += 1
        lasso = shortest_lasso(g, v)
        if lasso is None or lasso > limit:
            bad.append(v)
    return LassoReport(checked, bad)
