"""Exact, centralized ground truth for the testers.

Deciders return a witness alongside the answer.  Distances count edge
modifications; every property handled here is closed under edge deletion, so
deletions alone realize the distance.  Exhaustive routines have hard size
caps and raise ``OracleBudgetExceeded`` instead of approximating.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from .graph import Graph, connected_components
from .triangle import as_fraction

PROPERTIES = ("bipartite", "triangle_free", "cycle_free", "k_colorable")
MODELS = ("dense", "general", "sparse")

BIPARTITE_EXHAUSTIVE_MAX_N = 24
K_COLORING_MAX_N = 25
TRIANGLE_EXACT_MAX_N = 12
K_COLORING_DISTANCE_MAX_ASSIGNMENTS = 1 << 24


class OracleBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Decision:
    holds: bool
    witness: Any = None


# -- deciders -------------------------------------------------------------

def two_coloring(g: Graph) -> tuple[list[int] | None, list[int] | None]:
    """Return ``(coloring, None)`` or ``(None, odd_cycle)``."""
    color = [-1] * g.n
    parent = [-1] * g.n
    depth = [0] * g.n
    for s in range(g.n):
        if color[s] >= 0:
            continue
        color[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in g.adj[u]:
                if color[w] < 0:
                    color[w] = 1 - color[u]
                    parent[w] = u
                    depth[w] = depth[u] + 1
                    queue.append(w)
                elif color[w] == color[u]:
                    return None, _tree_cycle(u, w, parent, depth)
    return color, None


def _tree_cycle(u: int, w: int, parent: list[int], depth: list[int]) -> list[int]:
    """Cycle closed by non-tree edge ``uw`` through the BFS forest."""
    left, right = [u], [w]
    a, b = u, w
    while depth[a] > depth[b]:
        a = parent[a]
        left.append(a)
    while depth[b] > depth[a]:
        b = parent[b]
        right.append(b)
    while a != b:
        a, b = parent[a], parent[b]
        left.append(a)
        right.append(b)
    right.pop()  # common ancestor already on the left side
    return left + right[::-1]


def find_triangle(g: Graph) -> tuple[int, int, int] | None:
    for u, v in g.edges():
        common = g.neighbor_set(u) & g.neighbor_set(v)
        if common:
            return tuple(sorted((u, v, min(common))))
    return None


def find_cycle(g: Graph) -> list[int] | None:
    parent = [-1] * g.n
    depth = [-1] * g.n
    for s in range(g.n):
        if depth[s] >= 0:
            continue
        depth[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in g.adj[u]:
                if depth[w] < 0:
                    depth[w] = depth[u] + 1
                    parent[w] = u
                    queue.append(w)
                elif w != parent[u]:
                    return _tree_cycle(u, w, parent, depth)
    return None


def k_coloring(g: Graph, k: int) -> list[int] | None:
    """Backtracking search for a proper k-coloring (n <= 25)."""
    if k < 1:
        raise ValueError("k must be positive")
    if g.n > K_COLORING_MAX_N:
        raise OracleBudgetExceeded(
            f"k-coloring oracle handles at most {K_COLORING_MAX_N} vertices, got {g.n}")
    order = sorted(range(g.n), key=lambda v: -g.degree(v))
    color = [-1] * g.n

    def extend(i: int) -> bool:
        if i == len(order):
            return True
        v = order[i]
        used = {color[w] for w in g.adj[v] if color[w] >= 0}
        # symmetry breaking: never open more than one new color at a time
        fresh = max(color) + 1
        for c in range(min(k, fresh + 1)):
            if c not in used:
                color[v] = c
                if extend(i + 1):
                    return True
        color[v] = -1
        return False

    return list(color) if extend(0) else None


def decide_property(g: Graph, prop: str, k: int | None = None) -> Decision:
    if prop == "bipartite":
        coloring, odd = two_coloring(g)
        return Decision(True, coloring) if coloring is not None else Decision(False, odd)
    if prop == "triangle_free":
        tri = find_triangle(g)
        return Decision(tri is None, tri)
    if prop == "cycle_free":
        cyc = find_cycle(g)
        return Decision(cyc is None, cyc)
    if prop == "k_colorable":
        if k is None:
            raise ValueError("k_colorable needs k")
        col = k_coloring(g, k)
        return Decision(col is not None, col)
    raise ValueError(f"unknown property {prop!r}")


# -- distances ------------------------------------------------------------

def distance_cycle_free(g: Graph) -> int:
    """Edges outside any spanning forest: m - n + #components."""
    return g.m - g.n + len(connected_components(g))


def _partition_scan(g: Graph, labels_per_vertex: int) -> tuple[int, list[int]]:
    """Minimum number of monochromatic edges over all labelings, vertex n-1 fixed to 0."""
    n = g.n
    if n == 0 or g.m == 0:
        return 0, [0] * n
    edges = np.array(g.edge_list(), dtype=np.int64)
    k = labels_per_vertex
    total = k ** (n - 1)
    chunk = 1 << 16
    best, best_code = None, 0
    powers = k ** np.arange(n - 1, dtype=np.int64)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        labels = np.zeros((n, codes.size), dtype=np.int8)
        for v in range(n - 1):
            labels[v] = (codes // powers[v]) % k
        internal = np.zeros(codes.size, dtype=np.int32)
        for u, v in edges:
            internal += labels[u] == labels[v]
        i = int(np.argmin(internal))
        if best is None or internal[i] < best:
            best, best_code = int(internal[i]), int(codes[i])
    labeling = [(best_code // (k ** v)) % k for v in range(n - 1)] + [0]
    return best, labeling


def distance_bipartite(g: Graph) -> tuple[int, list[int]]:
    """Exact distance to bipartiteness by enumerating all 2^(n-1) bipartitions."""
    if g.n > BIPARTITE_EXHAUSTIVE_MAX_N:
        raise OracleBudgetExceeded(
            f"exhaustive bipartition search handles at most {BIPARTITE_EXHAUSTIVE_MAX_N} "
            f"vertices, got {g.n}; use bipartite_packing_bound")
    return _partition_scan(g, 2)


def distance_k_colorable(g: Graph, k: int) -> tuple[int, list[int]]:
    """Exact distance to k-colorability by enumerating all k^(n-1) labelings."""
    if g.n > 1 and k ** (g.n - 1) > K_COLORING_DISTANCE_MAX_ASSIGNMENTS:
        raise OracleBudgetExceeded(
            f"{k}^{g.n - 1} labelings exceed the exhaustive budget")
    return _partition_scan(g, k)


def bipartite_packing_bound(g: Graph) -> tuple[int, list[list[int]]]:
    """Greedy packing of edge-disjoint odd cycles.

    Each packed cycle needs its own deletion, so the packing size is a lower
    bound on the distance to bipartiteness.
    """
    nbrs = [set(a) for a in g.adj]
    cycles = []
    for s in range(g.n):
        while True:
            cyc = _short_odd_cycle_from(s, nbrs)
            if cyc is None:
                break
            cycles.append(cyc)
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                nbrs[a].discard(b)
                nbrs[b].discard(a)
    return len(cycles), cycles


def _short_odd_cycle_from(s: int, nbrs: list[set[int]]) -> list[int] | None:
    depth = {s: 0}
    parent = {s: -1}
    queue = deque([s])
    best = None
    while queue:
        u = queue.popleft()
        if best is not None and depth[u] > depth[best[0]]:
            break
        for w in sorted(nbrs[u]):
            if w not in depth:
                depth[w] = depth[u] + 1
                parent[w] = u
                queue.append(w)
            elif depth[w] == depth[u] and best is None:
                best = (u, w)
    if best is None:
        return None
    return _tree_cycle(best[0], best[1], parent, depth)


def triangle_packing(g: Graph) -> list[tuple[int, int, int]]:
    """Greedy maximal edge-disjoint triangle packing, lexicographic order."""
    used: set[tuple[int, int]] = set()
    packed = []
    for u in range(g.n):
        for v in g.adj[u]:
            if v <= u or (u, v) in used:
                continue
            for w in g.adj[v]:
                if w <= v or not g.has_edge(u, w):
                    continue
                if (u, w) in used or (v, w) in used or (u, v) in used:
                    continue
                used.update(((u, v), (u, w), (v, w)))
                packed.append((u, v, w))
    return packed


def all_triangles(g: Graph) -> list[tuple[int, int, int]]:
    tris = []
    for u in range(g.n):
        for v in g.adj[u]:
            if v <= u:
                continue
            for w in g.adj[v]:
                if w > v and g.has_edge(u, w):
                    tris.append((u, v, w))
    return tris


def exact_distance_triangle_free(g: Graph) -> int:
    """Minimum number of edges hitting every triangle (0-1 program, n <= 12)."""
    if g.n > TRIANGLE_EXACT_MAX_N:
        raise OracleBudgetExceeded(
            f"exact triangle-free distance handles at most {TRIANGLE_EXACT_MAX_N} vertices")
    tris = all_triangles(g)
    if not tris:
        return 0
    from scipy.optimize import Bounds, LinearConstraint, milp

    index = {e: i for i, e in enumerate(g.edges())}
    rows = np.zeros((len(tris), len(index)))
    for r, (a, b, c) in enumerate(tris):
        for e in ((a, b), (a, c), (b, c)):
            rows[r, index[e]] = 1
    res = milp(
        c=np.ones(len(index)),
        constraints=LinearConstraint(rows, lb=1, ub=np.inf),
        integrality=np.ones(len(index)),
        bounds=Bounds(0, 1),
    )
    if not res.success:
        raise RuntimeError(f"triangle hitting-set program failed: {res.message}")
    return int(round(res.fun))


@dataclass(frozen=True)
class TriangleBound:
    bound: int
    exact: int | None


def distance_triangle_free_lower_bound(g: Graph) -> TriangleBound:
    bound = len(triangle_packing(g))
    exact = exact_distance_triangle_free(g) if g.n <= TRIANGLE_EXACT_MAX_N else None
    if exact is not None and exact < bound:
        raise AssertionError(f"packing bound {bound} exceeds exact distance {exact}")
    return TriangleBound(bound, exact)


# -- certification ----------------------------------------------------------

@dataclass(frozen=True)
class FarnessCertificate:
    property: str
    distance: int
    model: str
    normalizer: int
    method: str
    n: int
    m: int
    d: int | None = None
    k: int | None = None

    @property
    def epsilon_star(self) -> float:
        return self.distance / self.normalizer if self.normalizer else 0.0

    @property
    def exact(self) -> bool:
        return self.method != "packing_bound"

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["epsilon_star"] = self.epsilon_star
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FarnessCertificate":
        fields = {k: data[k] for k in ("property", "distance", "model", "normalizer",
                                        "method", "n", "m")}
        return cls(**fields, d=data.get("d"), k=data.get("k"))


def normalizer(model: str, n: int, m: int, d: int | None = None) -> int:
    if model == "dense":
        return n * n
    if model == "general":
        return max(n, m)
    if model == "sparse":
        if d is None:
            raise ValueError("the sparse model needs a degree bound d")
        return d * n
    raise ValueError(f"unknown model {model!r}")


def measure_distance(g: Graph, prop: str, k: int | None = None) -> tuple[int, str]:
    """Exact distance where affordable, else a certified lower bound."""
    if prop == "cycle_free":
        return distance_cycle_free(g), "formula"
    if prop == "bipartite":
        if g.n <= BIPARTITE_EXHAUSTIVE_MAX_N:
            return distance_bipartite(g)[0], "exhaustive"
        if decide_property(g, "bipartite").holds:
            return 0, "decision"
        return bipartite_packing_bound(g)[0], "packing_bound"
    if prop == "triangle_free":
        if find_triangle(g) is None:
            return 0, "decision"
        tb = distance_triangle_free_lower_bound(g)
        if tb.exact is not None:
            return tb.exact, "exhaustive"
        return tb.bound, "packing_bound"
    if prop == "k_colorable":
        if k is None:
            raise ValueError("k_colorable needs k")
        if k == 2:
            return measure_distance(g, "bipartite")
        return distance_k_colorable(g, k)[0], "exhaustive"
    raise ValueError(f"unknown property {prop!r}")


def certify(g: Graph, prop: str, epsilon, model: str, d: int | None = None,
            k: int | None = None) -> tuple[FarnessCertificate, str]:
    """Certificate plus verdict: ``satisfies``, ``epsilon_far`` or ``neither``.

    An instance is reported epsilon-far when its distance (or certified lower
    bound) is at least ``epsilon * normalizer``.
    """
    if prop not in PROPERTIES:
        raise ValueError(f"unknown property {prop!r}")
    if model == "sparse":
        if d is None:
            raise ValueError("the sparse model needs a degree bound d")
        if g.max_degree() > d:
            raise ValueError(f"max degree {g.max_degree()} exceeds the degree bound d={d}")
    eps = as_fraction(epsilon)
    norm = normalizer(model, g.n, g.m, d)
    dist, method = measure_distance(g, prop, k)
    cert = FarnessCertificate(prop, dist, model, norm, method, g.n, g.m, d, k)
    if dist == 0 and method != "packing_bound":
        verdict = "satisfies"
    elif dist > 0 and dist >= eps * norm:
        verdict = "epsilon_far"
    else:
        verdict = "neither"
    return cert, verdict


def recheck(g: Graph, cert: FarnessCertificate) -> bool:
    """Recompute a certificate from scratch and compare field by field."""
    dist, method = measure_distance(g, cert.property, cert.k)
    norm = normalizer(cert.model, g.n, g.m, cert.d)
    return (dist, method, norm, g.n, g.m) == (
        cert.distance, cert.method, cert.normalizer, cert.n, cert.m)


def brute_force_min_deletions(g: Graph, holds) -> int:
    """Smallest edge set whose removal makes ``holds`` true; tiny graphs only."""
    edges = g.edge_list()
    if len(edges) > 20:
        raise OracleBudgetExceeded("brute-force deletion search limited to 20 edges")
    for size in range(len(edges) + 1):
        for removed in itertools.combinations(edges, size):
            if holds(g.without_edges(removed)):
                return size
    raise AssertionError("unreachable: the edgeless graph satisfies every property here")
