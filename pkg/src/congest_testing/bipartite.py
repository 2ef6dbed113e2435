"""Bipartiteness tester built on concurrent lazy random walks.

Each outer iteration starts two walks at every vertex and advances all of them
``L`` times.  A walk is the token ``(i, u)``: ``u`` is its origin and ``i`` the
number of actual moves so far.  A vertex holding more than ``xi`` walks
freezes them for that move.  After the moves, a vertex rejects if it has been
reached from some origin by walks of both parities.

Walks move lazily: with degree bound ``d`` each neighbor is chosen with
probability ``1/(2d)`` and the walk stays put otherwise, which makes the
uniform distribution stationary.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable

import numpy as np

from .graph import Graph
from .sim import (Message, SimConfig, Simulation, Transcript, VertexAlgorithm,
                  field_bits, id_bits)
from .triangle import as_fraction

# gamma uses natural logs; the walk-length and K formulas use base 2
GAMMA_LOG = math.e
WALK_LENGTH_LOG_BASE = 2
K_LOG_BASE = 2


class DegreeBoundError(ValueError):
    pass


def congestion_cap(n: int, walk_length: int, walks_per_vertex: int = 2) -> float:
    """xi = 3(2 ln n + ln L) + k."""
    return 3 * (2 * math.log(n) + math.log(walk_length)) + walks_per_vertex


@dataclass(frozen=True)
class BipartiteParams:
    d: int
    epsilon: Fraction = Fraction(1, 10)
    mode: str = "scaled"
    L: int | None = None
    eta: int | None = None
    c_K: float = 1.0
    c_L: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "epsilon", as_fraction(self.epsilon))
        if self.d < 1:
            raise ValueError("degree bound d must be at least 1")
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if self.mode not in ("scaled", "paper_faithful"):
            raise ValueError("mode must be 'scaled' or 'paper_faithful'")
        if self.mode == "scaled" and (self.L is None or self.eta is None):
            raise ValueError("scaled mode needs explicit L and eta")
        if self.L is not None and self.L < 1 or self.eta is not None and self.eta < 1:
            raise ValueError("L and eta must be positive")

    def resolve(self, n: int) -> "ResolvedWalkParams":
        eps = float(self.epsilon)
        log_n = math.log(max(n, 2), WALK_LENGTH_LOG_BASE)
        K = math.ceil(self.c_K * eps ** -4 * math.sqrt(n)
                      * math.sqrt(math.log(max(n, 2) / eps, K_LOG_BASE)))
        if self.mode == "paper_faithful":
            # exact rationals keep the ceilings honest at these magnitudes
            L = math.ceil(Fraction(self.c_L) * self.epsilon ** -8 * Fraction(log_n) ** 6)
            eta = math.ceil(Fraction(320 * K * K) / (n * self.epsilon))
        else:
            L, eta = self.L, self.eta
        xi = congestion_cap(max(n, 2), L)
        return ResolvedWalkParams(n=n, d=self.d, L=L, eta=eta, K=K, gamma=xi - 2, xi=xi)


@dataclass(frozen=True)
class ResolvedWalkParams:
    n: int
    d: int
    L: int
    eta: int
    K: int
    gamma: float
    xi: float

    @property
    def rounds_per_move(self) -> int:
        """R(xi): a vertex below the cap ships at most floor(xi) walks per edge."""
        return math.floor(self.xi)

    @property
    def round_budget(self) -> int:
        return self.eta * self.L * self.rounds_per_move


# -- walk primitives -------------------------------------------------------------

def lazy_step(v: int, g: Graph, d: int, rng: random.Random) -> int:
    """One lazy move from ``v`` using a single draw from ``0..2d-1``."""
    nb = g.adj[v]
    if len(nb) > d:
        raise DegreeBoundError(f"vertex {v} has degree {len(nb)} > d={d}")
    r = rng.randrange(2 * d)
    return nb[r] if r < len(nb) else v


def transition_matrix(g: Graph, d: int) -> list[list[Fraction]]:
    """Exact lazy-walk transition probabilities, by enumerating the draw."""
    if g.max_degree() > d:
        raise DegreeBoundError(f"max degree {g.max_degree()} exceeds d={d}")
    P = [[Fraction(0)] * g.n for _ in range(g.n)]
    for v in range(g.n):
        for r in range(2 * d):
            w = g.adj[v][r] if r < g.degree(v) else v
            P[v][w] += Fraction(1, 2 * d)
    return P


def detect_violation(history: Iterable[tuple[int, int]]) -> bool:
    """True iff some origin appears with both an even and an odd move count."""
    seen: dict[int, int] = {}
    for i, u in history:
        bits = seen.get(u, 0) | (1 << (i & 1))
        if bits == 3:
            return True
        seen[u] = bits
    return False


# -- centralized walk state (analysis and property checks) ---------------------------

@dataclass
class WalkState:
    """All walk tokens of one outer iteration, stored column-wise.

    ``seen[v, 2*u + parity]`` records that a walk from ``u`` with that move
    parity has been at ``v``.  ``seen`` is None when histories are not
    tracked, which keeps long occupancy experiments cheap.
    """

    pos: np.ndarray
    moves: np.ndarray
    origin: np.ndarray
    seen: np.ndarray | None
    size: int = 0

    def __post_init__(self):
        if self.seen is not None:
            self.size = self.seen.shape[0]

    @property
    def n(self) -> int:
        return self.size

    def occupancy(self) -> np.ndarray:
        return np.bincount(self.pos, minlength=self.n)

    def history(self, v: int) -> set[tuple[int, int]]:
        """``H_v`` as (parity, origin) pairs."""
        cols = np.flatnonzero(self.seen[v])
        return {(int(c) & 1, int(c) >> 1) for c in cols}

    def violating_vertices(self) -> np.ndarray:
        even = self.seen[:, 0::2]
        odd = self.seen[:, 1::2]
        return np.flatnonzero((even & odd).any(axis=1))


def initial_walks(n: int, walks_per_vertex: int = 2, track_history: bool = True) -> WalkState:
    origin = np.repeat(np.arange(n, dtype=np.int64), walks_per_vertex)
    seen = None
    if track_history:
        seen = np.zeros((n, 2 * n), dtype=bool)
        seen[np.arange(n), 2 * np.arange(n)] = True
    return WalkState(pos=origin.copy(), moves=np.zeros_like(origin), origin=origin, seen=seen, size=n)


class NeighborTable:
    """Padded neighbor array for vectorized lazy steps."""

    def __init__(self, g: Graph, d: int):
        if g.max_degree() > d:
            raise DegreeBoundError(f"max degree {g.max_degree()} exceeds d={d}")
        self.d = d
        self.deg = np.array(g.degrees(), dtype=np.int64)
        self.table = np.zeros((g.n, d), dtype=np.int64)
        for v, nb in enumerate(g.adj):
            self.table[v, : len(nb)] = nb


def move_walks_once(state: WalkState, xi: float, g: Graph | NeighborTable, d: int,
                    rng: np.random.Generator) -> WalkState:
    """Advance every walk at a vertex holding at most ``xi`` walks by one lazy step."""
    nt = g if isinstance(g, NeighborTable) else NeighborTable(g, d)
    pos = state.pos
    occ = np.bincount(pos, minlength=state.n)
    movable = occ[pos] <= xi
    r = rng.integers(0, 2 * d, size=pos.size)
    go = movable & (r < nt.deg[pos])
    dest = nt.table[pos, np.minimum(r, d - 1)]
    new_pos = np.where(go, dest, pos)
    new_moves = state.moves + go
    seen = state.seen
    if seen is not None:
        seen = seen.copy()
        arrived = np.flatnonzero(go)
        seen[new_pos[arrived], 2 * state.origin[arrived] + (new_moves[arrived] & 1)] = True
    return WalkState(pos=new_pos, moves=new_moves, origin=state.origin, seen=seen, size=state.n)


def walk_violation_probability(g: Graph, source: int, walks: int, length: int, d: int,
                               trials: int, rng: np.random.Generator) -> float:
    """Monte Carlo estimate of p_s(k): some vertex is reached from ``source`` by
    walk prefixes of both parities among ``walks`` independent lazy walks."""
    nt = NeighborTable(g, d)
    pos = np.full((trials, walks), source, dtype=np.int64)
    moves = np.zeros((trials, walks), dtype=np.int64)
    seen = np.zeros((trials, g.n, 2), dtype=bool)
    seen[:, source, 0] = True
    t_idx = np.repeat(np.arange(trials), walks).reshape(trials, walks)
    for _ in range(length):
        r = rng.integers(0, 2 * d, size=pos.shape)
        go = r < nt.deg[pos]
        dest = nt.table[pos, np.minimum(r, d - 1)]
        pos = np.where(go, dest, pos)
        moves = moves + go
        seen[t_idx, pos, moves & 1] = True
    hit = (seen[:, :, 0] & seen[:, :, 1]).any(axis=1)
    return float(hit.mean())


# -- the distributed tester ----------------------------------------------------------

class WalkVertex(VertexAlgorithm):
    def __init__(self, vid, neighbors, rng, tester: "BipartiteTester"):
        super().__init__(vid, neighbors, rng)
        self.t = tester
        self.walks: list[tuple[int, int]] = []
        self.incoming: list[tuple[int, int]] = []
        self.parity_seen: dict[int, int] = {}
        self.violation = False
        self.queues: dict[int, deque] = {}
        self.max_occupancy = 0
        self.frozen_moves = 0
        self.boundary_counts: list[int] = []
        self.two_d = 2 * tester.params.d

    def _record(self, token: tuple[int, int]) -> None:
        i, u = token
        bits = self.parity_seen.get(u, 0) | (1 << (i & 1))
        self.parity_seen[u] = bits
        if bits == 3:
            self.violation = True

    def _reset(self) -> None:
        start = (0, self.id)
        self.walks = [start, start]
        self.incoming = []
        self.parity_seen = {}
        self.violation = False
        self._record(start)

    def _drain(self, rnd: int) -> list:
        out = []
        bits = self.t.token_bits
        for u in list(self.queues):
            q = self.queues[u]
            out.append((u, Message(q.popleft(), bits)))
            if not q:
                del self.queues[u]
        return out

    def _schedule(self, rnd: int) -> None:
        R = self.t.R
        if self.queues:
            self.wake_at = rnd + 1
            return
        move_start = (rnd // R + 1) * R
        boundary = (rnd // self.t.iteration_rounds + 1) * self.t.iteration_rounds
        self.wake_at = move_start if (self.walks or self.incoming) else boundary

    def on_round(self, rnd, inbox):
        t = self.t
        for _, msg in inbox:
            token = msg.payload
            self.incoming.append(token)
            self._record(token)

        if rnd % t.R == 0:
            # move boundary: fold in arrivals, then possibly end the iteration
            self.walks.extend(self.incoming)
            self.incoming = []
            occ = len(self.walks)
            if occ > self.max_occupancy:
                self.max_occupancy = occ
            if rnd % t.iteration_rounds == 0:
                if rnd > 0:
                    self.boundary_counts.append(occ)
                    if self.violation:
                        self.reject()
                        self.halt()
                        return []
                    if rnd == t.round_budget:
                        self.accept()
                        self.halt()
                        return []
                self._reset()
                occ = len(self.walks)
                if occ > self.max_occupancy:
                    self.max_occupancy = occ
            if occ <= t.xi:
                stay = []
                nb = self.neighbors
                deg = len(nb)
                for i, u in self.walks:
                    r = self.rng.randrange(self.two_d)
                    if r < deg:
                        self.queues.setdefault(nb[r], deque()).append((i + 1, u))
                    else:
                        stay.append((i, u))
                self.walks = stay
            else:
                self.frozen_moves += 1

        out = self._drain(rnd) if self.queues else []
        self._schedule(rnd)
        return out


class BipartiteTester:
    name = "bipartite"

    def __init__(self, g: Graph, params: BipartiteParams):
        if g.max_degree() > params.d:
            raise DegreeBoundError(f"max degree {g.max_degree()} exceeds d={params.d}")
        self.params = params
        self.resolved = params.resolve(g.n)
        self.n = g.n
        self.xi = self.resolved.xi
        self.R = self.resolved.rounds_per_move
        self.iteration_rounds = self.resolved.L * self.R
        self.round_budget = self.resolved.round_budget
        self.token_bits = field_bits(self.resolved.L) + id_bits(g.n)

    def __call__(self, vid, neighbors, rng):
        return WalkVertex(vid, neighbors, rng, self)

    def annotate(self, transcript: Transcript, nodes) -> None:
        iters = max((len(x.boundary_counts) for x in nodes), default=0)
        totals = [sum(x.boundary_counts[j] for x in nodes if j < len(x.boundary_counts))
                  for j in range(iters)]
        rp = self.resolved
        transcript.extras.update(
            algorithm=self.name,
            d=rp.d,
            L=rp.L,
            eta=rp.eta,
            xi=rp.xi,
            rounds_per_move=self.R,
            round_budget=self.round_budget,
            mode=self.params.mode,
            max_occupancy=max((x.max_occupancy for x in nodes), default=0),
            frozen_moves=sum(x.frozen_moves for x in nodes),
            walks_at_iteration_end=totals,
        )


def run_bipartite_test(g: Graph, params: BipartiteParams,
                       cfg: SimConfig | None = None) -> Transcript:
    return Simulation(g, BipartiteTester(g, params), cfg).run()


def scaled(d: int, L: int, eta: int, epsilon=Fraction(1, 10)) -> BipartiteParams:
    return BipartiteParams(d=d, epsilon=epsilon, mode="scaled", L=L, eta=eta)


def paper_faithful(d: int, epsilon, c_K: float = 1.0, c_L: float = 1.0) -> BipartiteParams:
    return replace(BipartiteParams(d=d, epsilon=epsilon, mode="scaled", L=1, eta=1),
                   mode="paper_faithful", L=None, eta=None, c_K=c_K, c_L=c_L)
