"""Random and structured instance generators, including the sparse
lower-bound construction: a random graph with degree trimming and
short-cycle breaking."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .graph import Graph, complete_graph, disjoint_union
from .oracles import FarnessCertificate, certify


class CycleBudgetExceeded(RuntimeError):
    pass


class CertificationFailed(RuntimeError):
    pass


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def gnp(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi G(n, p)."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    rng = _rng(seed)
    edges = []
    for u in range(n - 1):
        hits = np.flatnonzero(rng.random(n - u - 1) < p)
        edges.extend((u, u + 1 + int(j)) for j in hits)
    return Graph(n, edges)


def gnm(n: int, m: int, seed: int) -> Graph:
    """Uniform graph with exactly ``m`` edges."""
    total = n * (n - 1) // 2
    if not 0 <= m <= total:
        raise ValueError(f"m must lie in [0, {total}]")
    rng = _rng(seed)
    chosen: set[tuple[int, int]] = set()
    while len(chosen) < m:
        batch = rng.integers(0, n, size=(2 * (m - len(chosen)) + 8, 2))
        for u, v in batch:
            if u != v:
                chosen.add((int(min(u, v)), int(max(u, v))))
                if len(chosen) == m:
                    break
    return Graph(n, sorted(chosen))


def random_bounded_degree(n: int, d: int, seed: int) -> Graph:
    """Pairing-model graph: ``d`` stubs per vertex matched at random, with
    self-loops and repeated pairs dropped, so every degree is at most ``d``."""
    rng = _rng(seed)
    stubs = np.repeat(np.arange(n), d)
    rng.shuffle(stubs)
    if stubs.size % 2:
        stubs = stubs[:-1]
    pairs = stubs.reshape(-1, 2)
    edges = {(int(min(a, b)), int(max(a, b))) for a, b in pairs if a != b}
    return Graph(n, sorted(edges))


def random_tree(n: int, seed: int) -> Graph:
    rng = _rng(seed)
    return Graph(n, [(int(rng.integers(0, v)), v) for v in range(1, n)])


def random_forest(n: int, trees: int, seed: int) -> Graph:
    rng = _rng(seed)
    roots = set(rng.choice(np.arange(1, n), size=min(trees - 1, n - 1), replace=False).tolist()) if n > 1 else set()
    return Graph(n, [(int(rng.integers(0, v)), v) for v in range(1, n) if v not in roots])


def random_bipartite(a: int, b: int, p: float, seed: int) -> Graph:
    rng = _rng(seed)
    mask = rng.random((a, b)) < p
    return Graph(a + b, [(int(i), a + int(j)) for i, j in zip(*np.nonzero(mask))])


def trim_to_degree(g: Graph, d: int) -> Graph:
    """Drop edges in canonical order until every degree is at most ``d``."""
    deg = g.degrees()
    keep = []
    for u, v in g.edges():
        if deg[u] > d or deg[v] > d:
            deg[u] -= 1
            deg[v] -= 1
        else:
            keep.append((u, v))
    return Graph(g.n, keep)


def windmill(blades: int) -> Graph:
    """Friendship graph: ``blades`` triangles sharing vertex 0."""
    return Graph(2 * blades + 1, [e for i in range(blades)
                                  for e in ((0, 2 * i + 1), (0, 2 * i + 2), (2 * i + 1, 2 * i + 2))])


def disjoint_triangles(k: int) -> Graph:
    return disjoint_union(*[complete_graph(3)] * k) if k else Graph(0)


# -- short cycles --------------------------------------------------------------

def enumerate_short_cycles(g: Graph, max_length: int, budget: int = 1_000_000) -> list[tuple[int, ...]]:
    """All simple cycles of length at most ``max_length``, each listed once as
    a vertex tuple starting at its smallest vertex, in sorted order."""
    found: list[tuple[int, ...]] = []
    if max_length < 3:
        return found
    for s in range(g.n):
        path = [s]
        on_path = {s}
        stack = [iter(w for w in g.adj[s] if w > s)]
        while stack:
            w = next(stack[-1], None)
            if w is None:
                stack.pop()
                on_path.discard(path.pop())
                continue
            if w in on_path:
                continue
            path.append(w)
            on_path.add(w)
            if len(path) >= 3 and g.has_edge(w, s) and path[1] < w:
                found.append(tuple(path))
                if len(found) > budget:
                    raise CycleBudgetExceeded(
                        f"more than {budget} cycles of length <= {max_length}; scale parameters down")
            if len(path) < max_length:
                stack.append(iter(x for x in g.adj[w] if x > s))
            else:
                on_path.discard(path.pop())
    found.sort(key=lambda c: (len(c), c))
    return found


def girth(g: Graph) -> int | None:
    """Length of a shortest cycle, or None for forests."""
    best = None
    for s in range(g.n):
        dist = {s: 0}
        parent = {s: -1}
        frontier = [s]
        while frontier:
            nxt = []
            for u in frontier:
                for w in g.adj[u]:
                    if w not in dist:
                        dist[w] = dist[u] + 1
                        parent[w] = u
                        nxt.append(w)
                    elif parent[u] != w:
                        length = dist[u] + dist[w] + 1
                        if best is None or length < best:
                            best = length
            if best is not None and 2 * (dist[frontier[0]] + 1) > best:
                break
            frontier = nxt
    return best


# -- lower-bound construction --------------------------------------------------------------

@dataclass(frozen=True)
class LowerBoundParams:
    n: int
    c: float = 1000.0
    degree_cap: int = 2000
    cycle_budget: int = 1_000_000

    def __post_init__(self):
        if self.c < 2:
            raise ValueError("c must be at least 2")
        if self.degree_cap < self.c:
            raise ValueError("degree_cap must be at least c")

    @property
    def edge_probability(self) -> float:
        return min(1.0, self.c / self.n) if self.n else 0.0

    @property
    def girth_threshold(self) -> int:
        """Cycles of length at most log n / log c are broken."""
        if self.n < 2:
            return 0
        return math.floor(math.log(self.n) / math.log(self.c) + 1e-12)


@dataclass
class ConstructionLog:
    seed: int
    sampled_edges: int
    over_cap_vertices: list[int] = field(default_factory=list)
    degree_trim_removed: list[tuple[int, int]] = field(default_factory=list)
    short_cycles_found: int = 0
    cycle_breaking_removed: list[tuple[int, int]] = field(default_factory=list)
    girth_threshold: int = 0

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["degree_trim_removed"] = [list(e) for e in self.degree_trim_removed]
        out["cycle_breaking_removed"] = [list(e) for e in self.cycle_breaking_removed]
        return out


def lower_bound_instance(params: LowerBoundParams, seed: int) -> tuple[Graph, ConstructionLog]:
    g = gnp(params.n, params.edge_probability, seed)
    log = ConstructionLog(seed=seed, sampled_edges=g.m, girth_threshold=params.girth_threshold)

    over = [v for v in range(g.n) if g.degree(v) > params.degree_cap]
    over_set = set(over)
    log.over_cap_vertices = over
    log.degree_trim_removed = [e for e in g.edges() if e[0] in over_set or e[1] in over_set]
    g = g.without_edges(log.degree_trim_removed)

    cycles = enumerate_short_cycles(g, params.girth_threshold, params.cycle_budget)
    log.short_cycles_found = len(cycles)
    removed: set[tuple[int, int]] = set()
    for cyc in cycles:
        edges = [(min(a, b), max(a, b)) for a, b in zip(cyc, cyc[1:] + cyc[:1])]
        if any(e in removed for e in edges):
            continue  # already broken by an earlier removal
        victim = min(edges)
        removed.add(victim)
        log.cycle_breaking_removed.append(victim)
    g = g.without_edges(removed)
    return g, log


# -- certified far instances -----------------------------------------------------------------

def _candidate(prop: str, n: int, seed: int, d: int | None) -> Graph:
    if prop == "cycle_free":
        return gnm(n, min(2 * n, n * (n - 1) // 2), seed)
    if prop == "triangle_free":
        return complete_graph(n) if n <= 40 else gnp(n, 0.5, seed)
    if prop == "bipartite":
        if d is not None:
            return random_bounded_degree(n, d, seed)
        return gnp(n, min(1.0, 6.0 / max(n - 1, 1)) if n > 20 else 0.4, seed)
    raise ValueError(f"no far-instance recipe for {prop!r}")


def far_instance(prop: str, n: int, target_epsilon, model: str, seed: int,
                 d: int | None = None, retries: int = 20) -> tuple[Graph, FarnessCertificate, int]:
    """A graph certified ``target_epsilon``-far, with its certificate and the seed that produced it."""
    for attempt in range(retries):
        s = seed + attempt
        g = _candidate(prop, n, s, d)
        if d is not None and g.max_degree() > d:
            g = trim_to_degree(g, d)
        cert, verdict = certify(g, prop, target_epsilon, model, d=d)
        if verdict == "epsilon_far":
            return g, cert, s
    raise CertificationFailed(
        f"no {prop} instance on {n} vertices certified {target_epsilon}-far "
        f"in the {model} model after {retries} seeds")

