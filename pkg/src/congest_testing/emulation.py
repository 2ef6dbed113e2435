"""Distributed emulation of vertex-sampling dense-model testers.

In each of two outer iterations every vertex picks itself with probability
``min(1, 5q/n)``.  Picked vertices then flood the edges among picked vertices
through their picked neighbors, one item per edge per round, and finally run a
witness checker on the component they collected.

Besides edge items, every picked vertex floods a record ``(v, picked degree)``.
A vertex only runs the checker once the records prove its view of the
component is complete, so a checker that needs the exact induced subgraph
(such as the perfect-graph one) never sees a partial picture.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

from .graph import (Graph, complete_graph, connected_components, cycle_graph,
                    disjoint_union)
from .oracles import OracleBudgetExceeded, k_coloring, two_coloring
from .sim import (Message, SimConfig, Simulation, Transcript, VertexAlgorithm,
                  id_bits)
from .triangle import as_fraction

PERFECT_MAX_N = 14
OUTER_ITERATIONS = 2
ROUND_CONSTANT = 224  # total rounds <= ROUND_CONSTANT * q^2 for every q >= 1


class CheckerContractError(ValueError):
    """The checker does not describe a non-disjointed property."""


# -- witness checkers -----------------------------------------------------------------

class WitnessChecker:
    """``checker(h)`` is true iff ``h`` cannot be an induced subgraph of a
    graph with the property.  Implementations must be pure."""

    name = "checker"

    def __call__(self, h: Graph) -> bool:
        raise NotImplementedError


class KColorabilityWitness(WitnessChecker):
    def __init__(self, k: int):
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.name = f"k-colorability:{k}"

    def __call__(self, h: Graph) -> bool:
        return witness_k_colorability(h, self.k)


class PerfectGraphWitness(WitnessChecker):
    name = "perfect"

    def __call__(self, h: Graph) -> bool:
        return witness_perfect_graph(h)


def witness_k_colorability(h: Graph, k: int) -> bool:
    """True iff some component of ``h`` has no proper k-coloring."""
    if k <= 2:
        # 2-coloring by BFS is exact at any size
        if k == 1:
            return h.m > 0
        return two_coloring(h)[0] is None
    if h.n > 25:
        raise OracleBudgetExceeded(f"k-colorability witness handles at most 25 vertices, got {h.n}")
    for comp in connected_components(h):
        sub, _ = h.induced_subgraph(comp)
        if k_coloring(sub, k) is None:
            return True
    return False


def _is_cycle(h: Graph) -> bool:
    if h.n < 3 or any(h.degree(v) != 2 for v in range(h.n)):
        return False
    return len(connected_components(h)) == 1


def find_odd_hole_or_antihole(h: Graph) -> tuple[str, list[int]] | None:
    """Smallest-first search for an induced odd cycle of length >= 5 or its complement."""
    if h.n > PERFECT_MAX_N:
        raise OracleBudgetExceeded(f"perfect-graph witness handles at most {PERFECT_MAX_N} vertices, got {h.n}")
    for size in range(5, h.n + 1, 2):
        for subset in itertools.combinations(range(h.n), size):
            sub, _ = h.induced_subgraph(list(subset))
            if _is_cycle(sub):
                return "odd_hole", list(subset)
            if _is_cycle(sub.complement()):
                return "odd_antihole", list(subset)
    return None


def witness_perfect_graph(h: Graph) -> bool:
    return find_odd_hole_or_antihole(h) is not None


_REGISTRY: dict[str, Callable[[str], WitnessChecker]] = {
    "k-colorability": lambda arg: KColorabilityWitness(int(arg)),
    "perfect": lambda arg: PerfectGraphWitness(),
}


def get_checker(spec: str) -> WitnessChecker:
    """Look up ``"k-colorability:k"`` or ``"perfect"``."""
    name, _, arg = spec.partition(":")
    if name not in _REGISTRY:
        raise KeyError(f"unknown checker {spec!r}; known: {sorted(_REGISTRY)}")
    if name == "k-colorability" and not arg:
        raise ValueError("k-colorability needs a color count, e.g. 'k-colorability:3'")
    if name == "perfect" and arg:
        raise ValueError("'perfect' takes no argument")
    try:
        return _REGISTRY[name](arg)
    except ValueError as exc:
        raise ValueError(f"bad checker argument in {spec!r}: {exc}") from None


def checker_names() -> list[str]:
    return sorted(_REGISTRY)


# -- contract self-test ------------------------------------------------------------------

def _probe_library() -> list[Graph]:
    """Small connected graphs: all connected graphs on up to 4 vertices plus a
    few cycles and cliques."""
    lib = [Graph(1)]
    for n in (2, 3, 4):
        pairs = list(itertools.combinations(range(n), 2))
        seen = set()
        for mask in range(1, 1 << len(pairs)):
            edges = [p for i, p in enumerate(pairs) if mask >> i & 1]
            g = Graph(n, edges)
            if len(connected_components(g)) != 1:
                continue
            key = min(tuple(sorted((min(perm[u], perm[v]), max(perm[u], perm[v])) for u, v in edges))
                      for perm in itertools.permutations(range(n)))
            if key not in seen:
                seen.add(key)
                lib.append(g)
    lib += [cycle_graph(5), cycle_graph(6), cycle_graph(7), complete_graph(5)]
    return lib


@lru_cache(maxsize=None)
def _self_test_cached(key: str, checker: WitnessChecker) -> None:
    library = _probe_library()
    verdicts = [checker(h) for h in library]
    clean = [h for h, w in zip(library, verdicts) if not w]
    for i, a in enumerate(clean):
        for b in clean[i:]:
            if checker(disjoint_union(a, b)):
                raise CheckerContractError(
                    f"checker {checker.name!r} flags a union of two non-witness components "
                    f"({a!r} and {b!r}); the property is disjointed and cannot be emulated")
    for h, w in zip(library, verdicts):
        if w and not checker(disjoint_union(h, Graph(1))):
            raise CheckerContractError(
                f"checker {checker.name!r} is not monotone: adding an isolated vertex to {h!r} "
                f"removes the witness")


def self_test_checker(checker: WitnessChecker) -> None:
    """Probe the checker on unions of small non-witness components.

    Raises ``CheckerContractError`` when two non-witnesses combine into a
    witness, the signature of a disjointed property.  Results are memoized.
    """
    _self_test_cached(checker.name, checker)


# -- parameters -------------------------------------------------------------------------------

@dataclass(frozen=True)
class EmulationParams:
    q: int
    pick_probability: Fraction | None = None  # override; default min(1, 5q/n)
    edge_cap: int | None = None  # override; default 100 q^2

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be at least 1")
        if self.pick_probability is not None:
            p = as_fraction(self.pick_probability)
            if not 0 <= p <= 1:
                raise ValueError("pick_probability must lie in [0, 1]")
            object.__setattr__(self, "pick_probability", p)

    @property
    def inner_iterations(self) -> int:
        return 10 * self.q

    @property
    def outer_iterations(self) -> int:
        return OUTER_ITERATIONS

    @property
    def cap(self) -> int:
        return 100 * self.q * self.q if self.edge_cap is None else self.edge_cap

    def probability(self, n: int) -> Fraction:
        if self.pick_probability is not None:
            return self.pick_probability
        return min(Fraction(1), Fraction(5 * self.q, max(n, 1)))

    @property
    def flood_rounds(self) -> int:
        """Pipelined flooding window: at most 50q^2 + 5q items cross a
        component of at most 10q vertices, diameter below 10q."""
        return 100 * self.q * self.q + 10 * self.q

    @property
    def period(self) -> int:
        # pick/notify round, flooding window, check round
        return self.flood_rounds + 2

    @property
    def round_budget(self) -> int:
        return (self.outer_iterations - 1) * self.period + self.flood_rounds + 1

    @property
    def round_constant(self) -> int:
        return ROUND_CONSTANT


# -- the distributed emulation ---------------------------------------------------------------------

_NOTIFY = Message((1,), 1)
EDGE, RECORD = 0, 1


class EmulationVertex(VertexAlgorithm):
    def __init__(self, vid, neighbors, rng, em: "Emulation"):
        super().__init__(vid, neighbors, rng)
        self.em = em
        self.picked = False
        self.picks: list[bool] = []
        self.capped: list[bool] = []
        self.complete: list[bool] = []
        self.budget_skips = 0
        self.sent_while_capped = 0
        self._reset()

    def _reset(self):
        self.picked = False
        self.pnbrs: tuple[int, ...] = ()
        self.edges: set[tuple[int, int]] = set()
        self.records: dict[int, int] = {}
        self.queues: dict[int, deque] = {}
        self.over_cap = False

    def _learn(self, item, sender: int | None) -> None:
        tag, a, b = item
        if tag == EDGE:
            if (a, b) in self.edges:
                return
            self.edges.add((a, b))
        else:
            if a in self.records:
                return
            self.records[a] = b
        if len(self.edges) > self.em.cap:
            self.over_cap = True
        for u in self.pnbrs:
            if u != sender:
                self.queues[u].append(item)

    def _view_complete(self) -> bool:
        touched: dict[int, int] = {}
        for a, b in self.edges:
            touched[a] = touched.get(a, 0) + 1
            touched[b] = touched.get(b, 0) + 1
        for s in set(touched) | set(self.records):
            if self.records.get(s) != touched.get(s, 0):
                return False
        return True

    def _check(self) -> bool:
        complete = self._view_complete()
        self.complete.append(complete)
        if not complete:
            return False
        verts = sorted(set(self.records))
        index = {v: i for i, v in enumerate(verts)}
        h = Graph(len(verts), [(index[a], index[b]) for a, b in self.edges])
        try:
            return self.em.checker(h)
        except OracleBudgetExceeded:
            self.budget_skips += 1
            return False

    def on_round(self, rnd, inbox):
        em = self.em
        outer, off = divmod(rnd, em.period)

        if off == 0:
            self._reset()
            self.picked = self.rng.random() < em.p
            self.picks.append(self.picked)
            if not self.picked:
                if outer + 1 == em.params.outer_iterations:
                    self.accept()
                    self.halt()
                else:
                    self.wake_at = rnd + em.period
                return []
            self.wake_at = rnd + 1
            return [(u, _NOTIFY) for u in self.neighbors]

        if not self.picked:
            return []  # stray notifications while idle

        if off == 1:
            self.pnbrs = tuple(u for u, _ in inbox)
            self.queues = {u: deque() for u in self.pnbrs}
            self._learn((RECORD, self.id, len(self.pnbrs)), None)
            for u in self.pnbrs:
                self._learn((EDGE, min(self.id, u), max(self.id, u)), None)
        else:
            for u, msg in inbox:
                self._learn(msg.payload, u)

        if off == em.params.flood_rounds + 1:
            self.capped.append(self.over_cap)
            if self._check():
                self.reject()
                self.halt()
            elif outer + 1 == em.params.outer_iterations:
                self.accept()
                self.halt()
            else:
                self.wake_at = rnd + 1
            return []

        out = []
        if self.over_cap:
            self.queues = {u: deque() for u in self.pnbrs}
        else:
            bits = em.item_bits
            for u, q in self.queues.items():
                if q:
                    out.append((u, Message(q.popleft(), bits)))
        pending = any(self.queues.values())
        self.wake_at = rnd + 1 if pending else outer * em.period + em.params.flood_rounds + 1
        return out


class Emulation:
    name = "emulate"

    def __init__(self, g: Graph, checker: WitnessChecker, params: EmulationParams):
        self_test_checker(checker)
        self.checker = checker
        self.params = params
        self.p = float(params.probability(g.n))
        self.cap = params.cap
        self.period = params.period
        self.item_bits = 1 + 2 * id_bits(g.n)

    def __call__(self, vid, neighbors, rng):
        return EmulationVertex(vid, neighbors, rng, self)

    def annotate(self, transcript: Transcript, nodes) -> None:
        iters = max((len(x.picks) for x in nodes), default=0)
        picks = [sum(1 for x in nodes if j < len(x.picks) and x.picks[j]) for j in range(iters)]
        capped = [sum(1 for x in nodes if j < len(x.capped) and x.capped[j]) for j in range(iters)]
        incomplete = [sum(1 for x in nodes if j < len(x.complete) and not x.complete[j])
                      for j in range(iters)]
        q = self.params.q
        transcript.extras.update(
            algorithm=self.name,
            checker=self.checker.name,
            q=q,
            pick_probability=self.p,
            edge_cap=self.cap,
            inner_iterations=self.params.inner_iterations,
            flood_rounds=self.params.flood_rounds,
            round_budget=self.params.round_budget,
            round_constant=ROUND_CONSTANT,
            round_bound=ROUND_CONSTANT * q * q,
            picked_per_iteration=picks,
            capped_per_iteration=capped,
            incomplete_views=incomplete,
            checker_budget_skips=sum(x.budget_skips for x in nodes),
        )


def emulate(g: Graph, checker: WitnessChecker, params: EmulationParams,
            cfg: SimConfig | None = None) -> Transcript:
    return Simulation(g, Emulation(g, checker, params), cfg).run()


def exact_rejection_probability(g: Graph, checker: WitnessChecker, p) -> Fraction:
    """Rejection probability when every picked component is collected in
    full, by enumerating all pick outcomes (small ``n`` only)."""
    if g.n > 16:
        raise OracleBudgetExceeded("pick enumeration handles at most 16 vertices")
    p = as_fraction(p)
    hit = Fraction(0)
    for mask in range(1 << g.n):
        picked = [v for v in range(g.n) if mask >> v & 1]
        sub, _ = g.induced_subgraph(picked)
        witness = any(checker(sub.induced_subgraph(c)[0]) for c in connected_components(sub))
        if witness:
            hit += p ** len(picked) * (1 - p) ** (g.n - len(picked))
    return 1 - (1 - hit) ** OUTER_ITERATIONS
