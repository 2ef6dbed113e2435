"""Triangle-freeness tester.

Every vertex repeatedly picks an ordered pair of distinct neighbors
``(w1, w2)`` and asks ``w1`` whether it is adjacent to ``w2``.  One iteration
takes two rounds (query, answer); a "yes" makes the asker reject.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .graph import Graph
from .sim import (Message, SimConfig, Simulation, Transcript, VertexAlgorithm,
                  id_bits)


def as_fraction(x) -> Fraction:
    """Exact rational from an int, str, float literal or Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class TriangleParams:
    epsilon: Fraction

    def __post_init__(self):
        eps = as_fraction(self.epsilon)
        object.__setattr__(self, "epsilon", eps)
        if not 0 < eps <= 1:
            raise ValueError("epsilon must lie in (0, 1]")

    @property
    def iterations(self) -> int:
        return math.ceil(32 / (self.epsilon * self.epsilon))

    @property
    def rounds(self) -> int:
        return 2 * self.iterations


_YES = Message((True,), 1)
_NO = Message((False,), 1)


class TriangleVertex(VertexAlgorithm):
    def __init__(self, vid, neighbors, rng, tester: "TriangleTester"):
        super().__init__(vid, neighbors, rng)
        self.iterations = tester.params.iterations
        self.query_bits = tester.query_bits
        self.nbr_set = frozenset(neighbors)
        self.asked: int | None = None
        self.queries_sent = 0

    def on_round(self, rnd, inbox):
        last = 2 * self.iterations
        if rnd % 2 == 1:
            # queries from neighbors: is the named vertex adjacent to me?
            return [(u, _YES if msg.payload[0] in self.nbr_set else _NO) for u, msg in inbox]

        for u, msg in inbox:
            if u == self.asked and msg.payload[0]:
                self.reject()
        self.asked = None
        if rnd == last:
            self.accept()
            self.halt()
            return []
        deg = len(self.neighbors)
        if deg < 2:
            # cannot pick two distinct neighbors; still answers queries
            self.wake_at = last
            return []
        i = self.rng.randrange(deg)
        j = self.rng.randrange(deg - 1)
        if j >= i:
            j += 1
        w1, w2 = self.neighbors[i], self.neighbors[j]
        self.asked = w1
        self.queries_sent += 1
        self.wake_at = rnd + 2
        return [(w1, Message((w2,), self.query_bits))]


class TriangleTester:
    """Factory building one ``TriangleVertex`` per vertex of ``g``."""

    name = "triangle"

    def __init__(self, g: Graph, params: TriangleParams):
        self.params = params
        self.query_bits = id_bits(g.n)

    def __call__(self, vid, neighbors, rng):
        return TriangleVertex(vid, neighbors, rng, self)

    def annotate(self, transcript: Transcript, nodes) -> None:
        transcript.extras.update(
            algorithm=self.name,
            epsilon=str(self.params.epsilon),
            iterations=self.params.iterations,
            round_budget=self.params.rounds,
        )


def run_triangle_test(g: Graph, params: TriangleParams, cfg: SimConfig | None = None) -> Transcript:
    return Simulation(g, TriangleTester(g, params), cfg).run()


@dataclass(frozen=True)
class TriangleDiagnostics:
    epsilon: Fraction
    m: int
    b: float
    heavy_vertices: frozenset[int]
    heavy_edges: int
    light_triangle_edges: int

    @property
    def heavy_edge_limit(self) -> Fraction:
        return self.epsilon * self.m / 2


def triangle_edges(g: Graph) -> set[tuple[int, int]]:
    """Edges lying on at least one triangle."""
    out = set()
    for u, v in g.edges():
        nu, nv = g.neighbor_set(u), g.neighbor_set(v)
        small, big = (nu, nv) if len(nu) <= len(nv) else (nv, nu)
        if any(w in big for w in small):
            out.add((u, v))
    return out


def classify_edges(g: Graph, epsilon) -> TriangleDiagnostics:
    """Split edges at the degree threshold b = 2*sqrt(m/epsilon).

    An edge is heavy when both endpoints have degree at least b.  Raises
    ``AssertionError`` if the heavy count exceeds epsilon*m/2.
    """
    eps = as_fraction(epsilon)
    m = g.m
    if m < 1:
        raise ValueError("classify_edges needs at least one edge")
    # deg >= b  <=>  deg^2 >= 4m/eps, compared exactly
    threshold_sq = 4 * m / eps
    heavy_v = frozenset(v for v in range(g.n) if g.degree(v) ** 2 >= threshold_sq)
    heavy = sum(1 for u, v in g.edges() if u in heavy_v and v in heavy_v)
    light_tri = sum(1 for u, v in triangle_edges(g) if not (u in heavy_v and v in heavy_v))
    diag = TriangleDiagnostics(
        epsilon=eps,
        m=m,
        b=2 * math.sqrt(m / float(eps)),
        heavy_vertices=heavy_v,
        heavy_edges=heavy,
        light_triangle_edges=light_tri,
    )
    assert heavy <= diag.heavy_edge_limit, (
        f"heavy edges {heavy} exceed epsilon*m/2 = {float(diag.heavy_edge_limit)}")
    return diag
