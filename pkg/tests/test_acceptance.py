"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s -m acceptance`` to see the
lines interleaved with progress; they are also printed without ``-s``.
"""

import json
import math
import random
import time
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from congest_testing.bipartite import (BipartiteTester, NeighborTable, initial_walks,
                                       move_walks_once, paper_faithful, scaled)
from congest_testing.cli import main as cli_main
from congest_testing.cycle import CycleParams, CycleTester, lasso_check, sparsify
from congest_testing.emulation import (ROUND_CONSTANT, Emulation, EmulationParams,
                                       KColorabilityWitness)
from congest_testing.generators import (LowerBoundParams, disjoint_triangles, gnm, gnp,
                                        lower_bound_instance, random_bipartite,
                                        random_bounded_degree, random_forest, random_tree,
                                        trim_to_degree, windmill)
from congest_testing.graph import Graph, complete_bipartite, complete_graph, cycle_graph, disjoint_union, write_graph
from congest_testing.oracles import certify, decide_property, distance_cycle_free
from congest_testing.sim import SimConfig, Simulation, run_trials
from congest_testing.triangle import TriangleParams, TriangleTester, classify_edges

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(capsys):
    def emit(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nCRITERION {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    return emit


def lower_sigma(p: float, trials: int) -> float:
    return 0.66 - 3 * math.sqrt(p * (1 - p) / trials)


def sizes(count=20, lo=32, hi=1024):
    return sorted({int(round(lo * (hi / lo) ** (i / (count - 1)))) for i in range(count)})


# -- 1. one-sided error --------------------------------------------------------------------

def _triangle_free_corpus():
    out = []
    for i, n in enumerate(sizes()):
        kind = i % 4
        if kind == 0:
            g = random_bipartite(n // 2, n - n // 2, min(1.0, 8 / n), i)
        elif kind == 1:
            g = cycle_graph(n)
        elif kind == 2:
            g = random_tree(n, i)
        else:
            # girth threshold log n / log 4 is at least 3 from n = 64 on
            g, _ = lower_bound_instance(LowerBoundParams(max(n, 64), 4, 8), i)
        out.append(g)
    return out


def _bipartite_corpus(d=4):
    out = []
    for i, n in enumerate(sizes()):
        kind = i % 3
        if kind == 0:
            g = trim_to_degree(random_bipartite(n // 2, n - n // 2, min(1.0, 6 / n), i), d)
        elif kind == 1:
            g = cycle_graph(n + n % 2)
        else:
            g = trim_to_degree(random_tree(n, i), d)
        out.append(g)
    return out


def _forest_corpus():
    return [random_forest(n, 1 + i % 5, i) for i, n in enumerate(sizes())]


def test_criterion_01_one_sided_error(verdict):
    start = time.perf_counter()
    seeds = 50
    tri, bip, forests = _triangle_free_corpus(), _bipartite_corpus(), _forest_corpus()
    assert all(decide_property(g, "triangle_free").holds for g in tri)
    assert all(decide_property(g, "bipartite").holds for g in bip)
    assert all(decide_property(g, "cycle_free").holds for g in forests)
    rejects = {}
    jobs = {
        "triangle": [(g, TriangleTester(g, TriangleParams(1))) for g in tri],
        "bipartite": [(g, BipartiteTester(g, scaled(4, 8, 2, epsilon=1))) for g in bip],
        "cycle": [(g, CycleTester(g, CycleParams(1))) for g in forests],
        "emulate": [(g, Emulation(g, KColorabilityWitness(2), EmulationParams(2))) for g in bip],
    }
    for name, pairs in jobs.items():
        rejects[name] = sum(run_trials(g, f, SimConfig(seed=0), seeds).rejects for g, f in pairs)
    elapsed = time.perf_counter() - start
    ok = all(r == 0 for r in rejects.values()) and elapsed < 300
    verdict(1, ok, f"rejects={rejects} graphs/property=20 (n {sizes()[0]}..{sizes()[-1]}) "
                   f"seeds={seeds} time={elapsed:.0f}s (<300s)")
    assert ok


# -- 2. triangle detection --------------------------------------------------------------------

def _tripartite(part, p, seed):
    rng = np.random.default_rng(seed)
    edges = []
    for a in range(3):
        for b in range(a + 1, 3):
            mask = rng.random((part, part)) < p
            edges += [(a * part + int(i), b * part + int(j)) for i, j in zip(*np.nonzero(mask))]
    return Graph(3 * part, edges)


def test_criterion_02_triangle_detection(verdict):
    start = time.perf_counter()
    eps = Fraction(1, 10)
    instances = {
        "K30": complete_graph(30),
        "gnp(40,0.5)": gnp(40, 0.5, 1),
        "windmill(50)": windmill(50),
        "tripartite(3x30,0.3)": _tripartite(30, 0.3, 2),
        "K20,20+60K3": disjoint_union(complete_bipartite(20, 20), disjoint_triangles(60)),
    }
    fractions, ok = {}, True
    for name, g in instances.items():
        cert, v = certify(g, "triangle_free", eps, "general")
        assert v == "epsilon_far", (name, cert)
        stats = run_trials(g, TriangleTester(g, TriangleParams(eps)), SimConfig(seed=0), 300)
        p = stats.reject_fraction
        fractions[name] = round(p, 3)
        ok &= p >= lower_sigma(p, 300)
    expected = 2 * math.ceil(32 / eps ** 2)
    rounds = {}
    for n in (10, 100, 1000):
        g = cycle_graph(n)
        tr = Simulation(g, TriangleTester(g, TriangleParams(eps)), SimConfig(seed=n)).run()
        rounds[n] = tr.rounds_used
        ok &= tr.rounds_used == expected and not tr.reject
    elapsed = time.perf_counter() - start
    ok &= elapsed < 600
    verdict(2, ok, f"reject_fraction={fractions} rounds={rounds} (expect {expected}) time={elapsed:.0f}s (<600s)")
    assert ok


# -- 3. heavy-edge bound -----------------------------------------------------------------------

def _heavy_core(s, eps):
    """Clique on ``s`` vertices joined to a shared leaf set just large enough
    that every clique vertex reaches the heavy threshold."""
    leaves = 0
    while (s - 1 + leaves) ** 2 < 4 * (s * (s - 1) // 2 + s * leaves) / eps:
        leaves += 1
    edges = [(a, b) for a in range(s) for b in range(a + 1, s)]
    edges += [(a, s + j) for a in range(s) for j in range(leaves)]
    return Graph(s + leaves, edges)


def test_criterion_03_heavy_edge_bound(verdict):
    rng = random.Random(2024)
    worst, count, violations = 0.0, 0, 0
    for i in range(1000):
        n = int(round(10 * 100 ** rng.random()))
        eps = (Fraction(1, 20), Fraction(1, 10), Fraction(1, 2))[i % 3]
        shape = i % 5
        if shape == 4:
            g = _heavy_core(rng.randint(2, 12), eps)
            if g.n > 1000:
                g = _heavy_core(2, eps)
        elif shape == 0:
            g = gnp(n, rng.choice([0.05, 0.2, 0.6, 1.0]), i)
        elif shape == 1:
            # a dense core inside a sparse graph concentrates heavy vertices
            core = max(2, n // 8)
            g = disjoint_union(complete_graph(core), gnp(n - core, 2 / max(n - core, 1), i))
        elif shape == 2:
            g = complete_bipartite(max(1, n // 10), n - max(1, n // 10))
        else:
            g = random_bounded_degree(n, rng.randint(1, 12), i)
        if g.m == 0:
            continue
        count += 1
        try:
            d = classify_edges(g, eps)
        except AssertionError:
            violations += 1
            continue
        worst = max(worst, d.heavy_edges / float(d.heavy_edge_limit))
    ok = violations == 0 and count >= 950 and worst > 0
    verdict(3, ok, f"graphs={count} violations={violations} max H/(eps*m/2)={worst:.3f}")
    assert ok


# -- 4. walk conservation and occupancy -------------------------------------------------------

def test_criterion_04_conservation_and_occupancy(verdict):
    start = time.perf_counter()
    ok = True
    notes = []
    # conservation inside the distributed tester at every iteration boundary
    c8 = cycle_graph(8)
    d4 = random_bounded_degree(1000, 4, 7)
    for g, d, seeds in ((c8, 2, 200), (d4, 4, 10)):
        for s in range(seeds):
            tr = Simulation(g, BipartiteTester(g, scaled(d, 10, 3)), SimConfig(seed=s)).run()
            counts = tr.extras["walks_at_iteration_end"]
            ok &= bool(counts) and all(c == 2 * g.n for c in counts)
    notes.append("distributed conservation checked")
    # centralized moves: conservation after every move, occupancy means
    for label, g, d in (("C8", c8, 2), ("d4n1000", d4, 4)):
        nt = NeighborTable(g, d)
        xi = 2 + 3 * (2 * math.log(g.n) + math.log(100))
        totals = np.zeros(g.n)
        samples = 0
        for seed in range(200):
            rng = np.random.default_rng(seed)
            state = initial_walks(g.n, track_history=False)
            for _ in range(100):
                state = move_walks_once(state, xi, nt, d, rng)
                occ = state.occupancy()
                ok &= int(occ.sum()) == 2 * g.n
                totals += occ
                samples += 1
        means = totals / samples
        pooled = means.mean()
        if label == "C8":
            spread = float(np.max(np.abs(means - 2)))
        else:
            deg = np.array(g.degrees())
            classes = [means[deg == k].mean() for k in set(deg.tolist()) if (deg == k).sum() >= 50]
            spread = float(max(abs(c - 2) for c in classes))
        ok &= abs(pooled - 2) <= 0.1 and spread <= 0.1
        notes.append(f"{label}: pooled={pooled:.4f} max|mean-2| per {'vertex' if label == 'C8' else 'degree class'}={spread:.4f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 300
    verdict(4, ok, "; ".join(notes) + f"; time={elapsed:.0f}s (<300s)")
    assert ok


# -- 5. congestion -------------------------------------------------------------------------------

def test_criterion_05_congestion(verdict):
    start = time.perf_counter()
    n, ell, d = 1000, 100, 4
    cap = 2 + 3 * (2 * math.log(n) + math.log(ell))
    g = random_bounded_degree(n, d, 11)
    nt = NeighborTable(g, d)
    exceeded, peak = 0, 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        state = initial_walks(n, track_history=False)
        worst = 0
        for _ in range(ell):
            state = move_walks_once(state, cap, nt, d, rng)
            worst = max(worst, int(state.occupancy().max()))
        peak = max(peak, worst)
        exceeded += worst > cap
    # the distributed tester never exceeds its per-edge message budget
    tr = Simulation(g, BipartiteTester(g, scaled(d, ell, 1)), SimConfig(seed=0)).run()
    elapsed = time.perf_counter() - start
    ok = exceeded <= 2 and tr.max_message_bits <= tr.bandwidth and elapsed < 300
    verdict(5, ok, f"runs over cap {cap:.1f}: {exceeded}/100 (peak {peak}); "
                   f"tester bits {tr.max_message_bits}<={tr.bandwidth}; time={elapsed:.0f}s (<300s)")
    assert ok


# -- 6. bipartiteness detection --------------------------------------------------------------

def test_criterion_06_bipartite_detection(verdict):
    start = time.perf_counter()
    params = LowerBoundParams(256, 8, 16)
    fractions, stars, ok = [], [], True
    seed = 0
    while len(fractions) < 5:
        g, _ = lower_bound_instance(params, seed)
        seed += 1
        cert, v = certify(g, "bipartite", "0.05", "general")
        if v != "epsilon_far":
            continue
        sparse, _ = certify(g, "bipartite", "0.05", "sparse", d=params.degree_cap)
        stars.append((round(cert.epsilon_star, 3), round(sparse.epsilon_star, 3)))
        stats = run_trials(g, BipartiteTester(g, scaled(params.degree_cap, 64, 200, "0.05")),
                           SimConfig(seed=1000 * seed), 100)
        p = stats.reject_fraction
        fractions.append(p)
        ok &= p >= lower_sigma(p, 100)
    shape = paper_faithful(16, Fraction(1, 20)).resolve(256)
    ok &= shape.L == math.ceil(20 ** 8 * 8 ** 6) and shape.eta == math.ceil(320 * shape.K ** 2 / (256 * 0.05))
    elapsed = time.perf_counter() - start
    ok &= elapsed < 900
    verdict(6, ok, f"reject_fraction={fractions} eps*(general, sparse)={stars} "
                   f"paper-faithful L={shape.L} K={shape.K} eta={shape.eta} time={elapsed:.0f}s (<900s)")
    assert ok


# -- 7. cycle detection -----------------------------------------------------------------------

def test_criterion_07_cycle_detection(verdict):
    start = time.perf_counter()
    eps = Fraction(1, 4)
    bound = 30 * math.log2(512) / float(eps) + 3
    fractions, worst, ok = [], 0, True
    for inst in range(3):
        g = gnm(512, 1024, inst)
        comps = nx.number_connected_components(nx.Graph(list(g.edges())) if g.m else nx.Graph())
        comps += g.n - sum(1 for v in range(g.n) if g.degree(v))  # isolated vertices
        assert distance_cycle_free(g) == g.m - g.n + comps >= eps * g.m
        rounds = []
        stats = run_trials(g, CycleTester(g, CycleParams(eps)), SimConfig(seed=inst * 1000), 300)
        rounds = stats.rounds
        worst = max(worst, max(rounds))
        p = stats.reject_fraction
        fractions.append(p)
        ok &= p >= lower_sigma(p, 300) and all(r <= bound for r in rounds)
    elapsed = time.perf_counter() - start
    ok &= elapsed < 600
    verdict(7, ok, f"reject_fraction={fractions} max rounds={worst}<={bound:.0f} time={elapsed:.0f}s (<600s)")
    assert ok


# -- 8. sparsification farness ----------------------------------------------------------------

def test_criterion_08_sparsification_farness(verdict):
    start = time.perf_counter()
    eps = 0.25
    g = gnm(512, 1024, 0)
    assert distance_cycle_free(g) >= eps * max(g.n, g.m)
    below = 0
    least = math.inf
    for seed in range(500):
        h, _ = sparsify(g, eps / 2, random.Random(seed))
        ratio = distance_cycle_free(h) / max(h.n, h.m)
        least = min(least, ratio)
        below += ratio < eps / 4
    limit = math.exp(-eps ** 2 * g.m / 32) + 0.02
    elapsed = time.perf_counter() - start
    ok = below / 500 <= limit and elapsed < 120
    verdict(8, ok, f"below eps/4: {below}/500 (limit {limit:.3f}); min eps*(G')={least:.3f} "
                   f"time={elapsed:.0f}s (<120s)")
    assert ok


# -- 9. emulation ------------------------------------------------------------------------------

def test_criterion_09_emulation(verdict):
    start = time.perf_counter()
    q = 5
    g = cycle_graph(5)
    em = Emulation(g, KColorabilityWitness(2), EmulationParams(q))
    max_rounds = []
    stats = run_trials(g, em, SimConfig(seed=0), 300,
                       on_transcript=lambda t, tr: max_rounds.append(tr.rounds_used))
    p = stats.reject_fraction
    ok = p >= lower_sigma(p, 300)
    ok &= max(max_rounds) <= ROUND_CONSTANT * q * q
    # pick-count concentration on a 100-vertex graph
    h = gnp(100, 0.05, 3)
    emh = Emulation(h, KColorabilityWitness(2), EmulationParams(q))
    inside = total = 0

    def tally(_, tr):
        nonlocal inside, total
        for c in tr.extras["picked_per_iteration"]:
            total += 1
            inside += q <= c <= 10 * q

    run_trials(h, emh, SimConfig(seed=0, halt_on_reject=False), 1000, on_transcript=tally)
    frac = inside / total
    ok &= frac >= 2 / 3 - 3 * math.sqrt((2 / 9) / total)
    elapsed = time.perf_counter() - start
    ok &= elapsed < 600
    verdict(9, ok, f"C5 reject_fraction={p:.3f}; max rounds={max(max_rounds)} <= C*q^2 with C={ROUND_CONSTANT}; "
                   f"picks in [q,10q]: {inside}/{total}; time={elapsed:.0f}s (<600s)")
    assert ok


# -- 10. determinism ---------------------------------------------------------------------------

def test_criterion_10_determinism(verdict, tmp_path, capsys):
    k30 = tmp_path / "k30.txt"
    write_graph(complete_graph(30), k30)
    c5 = tmp_path / "c5.txt"
    write_graph(cycle_graph(5), c5)
    far = tmp_path / "far.txt"
    assert cli_main(["gen", "--kind", "far", "--property", "cycle_free", "--n", "512",
                     "--epsilon", "0.25", "--output", str(far)]) == 0
    capsys.readouterr()
    experiments = {
        "triangle": ["trials", "--algorithm", "triangle", "--graph", str(k30), "--epsilon", "0.1", "--trials", "20"],
        "cycle": ["trials", "--algorithm", "cycle", "--graph", str(far), "--epsilon", "0.25", "--trials", "20"],
        "bipartite": ["trials", "--algorithm", "bipartite", "--graph", str(c5), "--d", "2", "--L", "20",
                      "--eta", "10", "--trials", "20", "--bandwidth-multiplier", "8"],
        "emulate": ["trials", "--algorithm", "emulate", "--graph", str(c5), "--q", "5",
                    "--checker", "k-colorability:2", "--trials", "20"],
    }
    same = {}
    for name, argv in experiments.items():
        blobs = []
        for i in range(2):
            out = tmp_path / f"{name}{i}.json"
            assert cli_main(argv + ["--seed", "5", "--output", str(out)]) == 0
            blobs.append(out.read_bytes())
        json.loads(blobs[0])
        same[name] = blobs[0] == blobs[1]
    ok = all(same.values())
    verdict(10, ok, f"byte-identical reruns: {same}")
    assert ok


# -- 11. closed-walk structure ------------------------------------------------------------------

def test_criterion_11_lasso_structure(verdict):
    start = time.perf_counter()
    eps = Fraction(1, 4)
    params = CycleParams(eps)
    n = 256
    T, half = params.phase1_length(n), params.phase2_length(n)
    checked = violations = regenerated = 0
    diag = {far: 0 for far in (4, 6, 8)}
    diag_checked = {far: 0 for far in (4, 6, 8)}
    log = []
    for seed in range(100):
        g, _ = lower_bound_instance(LowerBoundParams(n, 8, 16), seed)
        sparse, _ = sparsify(g, float(eps) / 2, random.Random(seed))
        rep = lasso_check(g, sparse, far=half, limit=T)
        if rep.violations:
            regenerated += 1
            log.append((seed, rep.violations))
            g, _ = lower_bound_instance(LowerBoundParams(n, 8, 16), seed + 10_000)
            sparse, _ = sparsify(g, float(eps) / 2, random.Random(seed + 10_000))
            rep = lasso_check(g, sparse, far=half, limit=T)
        checked += rep.checked
        violations += len(rep.violations)
        for far in diag:
            r = lasso_check(g, sparse, far=far, limit=2 * far)
            diag[far] += len(r.violations)
            diag_checked[far] += r.checked
    elapsed = time.perf_counter() - start
    ok = violations == 0
    verdict(11, ok, f"T={T} T/2={half}: vertices with a >=T/2-distant vertex={checked}, violations={violations}, "
                    f"regenerated={regenerated} {log}; scaled diagnostic (far, limit=2*far) "
                    f"violations/checked={ {f: (diag[f], diag_checked[f]) for f in diag} } time={elapsed:.0f}s")
    assert ok
