"""Round-synchronous CONGEST execution engine.

Round 0 is a local step: every vertex runs ``on_round(0, [])`` and may emit
the messages that travel in round 1.  For ``r >= 1`` the inbox of round ``r``
holds exactly the messages emitted in round ``r - 1``.  ``rounds_used`` counts
communication rounds, so a run always spans at least one round.

By default a rejection ends the run once the current round completes; with
``halt_on_reject=False`` the run continues until every vertex halts.

Vertices that have no mail are only invoked when they asked to be woken
(``wake_at``).  Rounds in which nobody is invoked are skipped over but still
counted; observable behaviour equals stepping every vertex every round in
vertex-id order.
"""

from __future__ import annotations

import enum
import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Sequence

from .graph import Graph

_MASK64 = (1 << 64) - 1


class Verdict(str, enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    UNDECIDED = "undecided"


class Message(NamedTuple):
    payload: tuple
    bit_size: int


class SimulationFault(RuntimeError):
    def __init__(self, message: str, vertex: int | None = None, round: int | None = None):
        self.vertex = vertex
        self.round = round
        super().__init__(message)


class TrialFault(RuntimeError):
    def __init__(self, trial: int, fault: SimulationFault):
        self.trial = trial
        self.fault = fault
        super().__init__(f"trial {trial}: {fault}")


def id_bits(n: int) -> int:
    """Width of a fixed-size field holding a vertex id of an ``n``-vertex graph."""
    return max(1, (n - 1).bit_length())


def field_bits(max_value: int) -> int:
    """Width of a fixed-size field holding integers ``0..max_value``."""
    return max(1, int(max_value).bit_length())


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, stream: int) -> int:
    return _splitmix64(_splitmix64(seed & _MASK64) ^ (stream & _MASK64))


def vertex_rng(seed: int, vertex: int) -> random.Random:
    """Private random stream of ``vertex`` under run seed ``seed``."""
    return random.Random(derive_seed(seed, vertex))


@dataclass(frozen=True)
class SimConfig:
    bandwidth_multiplier: float = 4.0
    max_rounds: int = 10_000_000
    seed: int = 0
    halt_on_reject: bool = True

    def __post_init__(self):
        if not self.bandwidth_multiplier > 0:
            raise ValueError("bandwidth_multiplier must be positive")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")

    def bandwidth(self, n: int) -> int:
        """Per-message budget B = ceil(c * log2 n) bits."""
        if n <= 1:
            return 0
        return math.ceil(float(self.bandwidth_multiplier) * math.log2(n) - 1e-9)

    def with_seed(self, seed: int) -> "SimConfig":
        return SimConfig(self.bandwidth_multiplier, self.max_rounds, seed, self.halt_on_reject)


class VertexAlgorithm:
    """Per-vertex automaton driven by the engine.

    Subclasses implement ``on_round``; they call ``reject()``/``accept()`` to
    set their output and ``halt()`` once they have nothing left to do.  To be
    invoked in a later round without receiving mail, set ``wake_at``; the
    request is cleared once that round arrives.
    """

    def __init__(self, vid: int, neighbors: Sequence[int], rng: random.Random):
        self.id = vid
        self.neighbors = neighbors
        self.rng = rng
        self.done = False
        self.wake_at: int | None = None
        self._verdict = Verdict.UNDECIDED

    def on_round(self, rnd: int, inbox: list[tuple[int, Message]]) -> list[tuple[int, Message]]:
        raise NotImplementedError

    def verdict(self) -> Verdict:
        return self._verdict

    def reject(self) -> None:
        self._verdict = Verdict.REJECT

    def accept(self) -> None:
        if self._verdict is not Verdict.REJECT:
            self._verdict = Verdict.ACCEPT

    def halt(self) -> None:
        self.done = True
        self.wake_at = None


class NoOp(VertexAlgorithm):
    """Sends nothing and accepts."""

    def on_round(self, rnd, inbox):
        self.accept()
        self.halt()
        return []


@dataclass
class Transcript:
    n: int
    seed: int
    bandwidth: int
    rounds_used: int
    per_round_messages: list[int]
    max_message_bits: int
    verdicts: list[Verdict]
    truncated: bool = False
    undelivered_messages: int = 0
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def reject(self) -> bool:
        return any(v is Verdict.REJECT for v in self.verdicts)

    @property
    def global_verdict(self) -> Verdict:
        return Verdict.REJECT if self.reject else Verdict.ACCEPT

    @property
    def total_messages(self) -> int:
        return sum(self.per_round_messages)

    def rejecting_vertices(self) -> list[int]:
        return [v for v, x in enumerate(self.verdicts) if x is Verdict.REJECT]

    def verdict_histogram(self) -> dict[str, int]:
        counts = Counter(v.value for v in self.verdicts)
        return {k.value: counts.get(k.value, 0) for k in Verdict}

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "seed": self.seed,
            "bandwidth_bits": self.bandwidth,
            "rounds_used": self.rounds_used,
            "reject": self.reject,
            "per_round_messages": list(self.per_round_messages),
            "max_message_bits": self.max_message_bits,
            "verdict_histogram": self.verdict_histogram(),
            "truncated": self.truncated,
            "extras": self.extras,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


AlgoFactory = Callable[[int, Sequence[int], random.Random], VertexAlgorithm]


class Simulation:
    """One execution of a per-vertex algorithm on a graph.

    A factory may define ``annotate(transcript, nodes)`` to attach
    algorithm-specific fields to ``transcript.extras`` after the run.
    """

    def __init__(self, g: Graph, factory: AlgoFactory, cfg: SimConfig | None = None,
                 observer: Callable[[int, list[VertexAlgorithm]], None] | None = None):
        self.graph = g
        self.factory = factory
        self.cfg = cfg or SimConfig()
        self.observer = observer
        self.nodes: list[VertexAlgorithm] = []

    def run(self) -> Transcript:
        g, cfg = self.graph, self.cfg
        n = g.n
        budget = cfg.bandwidth(n)
        nodes = [self.factory(v, g.adj[v], vertex_rng(cfg.seed, v)) for v in range(n)]
        self.nodes = nodes
        nbr_sets = [g.neighbor_set(v) for v in range(n)]

        per_round: list[int] = []
        max_bits = 0
        schedule: dict[int, set[int]] = {}
        mail: dict[int, list] = {}
        rejected = False
        truncated = False
        undelivered = 0

        rnd = 0
        active: list[int] = list(range(n))
        while True:
            outgoing: dict[int, list] = {}
            sent = 0
            for v in active:
                node = nodes[v]
                if node.done:
                    continue
                inbox = mail.get(v, [])
                if node.wake_at is not None and node.wake_at <= rnd:
                    node.wake_at = None
                was_rejected = node._verdict is Verdict.REJECT
                out = node.on_round(rnd, inbox)
                if was_rejected and node._verdict is not Verdict.REJECT:
                    raise SimulationFault(f"vertex {v} withdrew a reject in round {rnd}", v, rnd)
                if node._verdict is Verdict.REJECT:
                    rejected = True
                if out:
                    dests = set()
                    for to, msg in out:
                        if to not in nbr_sets[v]:
                            raise SimulationFault(
                                f"vertex {v} addressed non-neighbor {to} in round {rnd}", v, rnd)
                        if to in dests:
                            raise SimulationFault(
                                f"vertex {v} sent two messages to {to} in round {rnd}", v, rnd)
                        dests.add(to)
                        bits = msg.bit_size
                        if bits > budget:
                            raise SimulationFault(
                                f"vertex {v} sent a {bits}-bit message in round {rnd}; "
                                f"budget is {budget} bits", v, rnd)
                        if bits > max_bits:
                            max_bits = bits
                        box = outgoing.get(to)
                        if box is None:
                            outgoing[to] = [(v, msg)]
                        else:
                            box.append((v, msg))
                    sent += len(out)
                wake = node.wake_at
                if wake is not None and not node.done:
                    if wake <= rnd:
                        raise SimulationFault(
                            f"vertex {v} asked to wake at round {wake} from round {rnd}", v, rnd)
                    bucket = schedule.get(wake)
                    if bucket is None:
                        schedule[wake] = {v}
                    else:
                        bucket.add(v)

            if self.observer is not None:
                self.observer(rnd, nodes)

            finished_now = rnd >= 1 and ((rejected and cfg.halt_on_reject)
                                         or all(x.done for x in nodes))
            if finished_now or rnd >= cfg.max_rounds:
                truncated = not finished_now
                undelivered = sent
                break

            mail = outgoing
            if sent:
                nxt = rnd + 1
            elif schedule:
                nxt = min(schedule)
            else:
                # quiescent: nothing in flight, nobody waiting
                nxt = rnd + 1
                per_round.append(0)
                rnd = nxt
                break
            if nxt > cfg.max_rounds:
                per_round.extend([0] * (cfg.max_rounds - rnd))
                rnd = cfg.max_rounds
                truncated = True
                break
            per_round.extend([0] * (nxt - rnd - 1))
            per_round.append(sent)
            rnd = nxt
            woken = schedule.pop(rnd, ())
            ids = set(mail)
            ids.update(v for v in woken if nodes[v].wake_at == rnd)
            active = sorted(ids)

        transcript = Transcript(
            n=n,
            seed=cfg.seed,
            bandwidth=budget,
            rounds_used=max(rnd, 1),
            per_round_messages=per_round if per_round else [0],
            max_message_bits=max_bits,
            verdicts=[x.verdict() for x in nodes],
            truncated=truncated,
            undelivered_messages=undelivered,
        )
        annotate = getattr(self.factory, "annotate", None)
        if annotate is not None:
            annotate(transcript, nodes)
        return transcript


def run(g: Graph, factory: AlgoFactory, cfg: SimConfig | None = None) -> Transcript:
    return Simulation(g, factory, cfg).run()


@dataclass
class RejectionStats:
    trials: int
    rejects: int
    reject_fraction: float
    mean_rounds: float
    max_congestion_observed: int
    rounds: list[int]
    reject_flags: list[bool]

    def sigma(self, p: float | None = None) -> float:
        """Binomial standard error of the rejection fraction."""
        p = self.reject_fraction if p is None else p
        return math.sqrt(max(p * (1 - p), 0.0) / self.trials)

    def to_dict(self) -> dict[str, Any]:
        return {
            "trials": self.trials,
            "rejects": self.rejects,
            "reject_fraction": self.reject_fraction,
            "mean_rounds": self.mean_rounds,
            "max_congestion_observed": self.max_congestion_observed,
        }


def run_trials(g: Graph, factory: AlgoFactory, cfg: SimConfig, trials: int,
               on_transcript: Callable[[int, Transcript], None] | None = None) -> RejectionStats:
    """Monte Carlo harness: trial ``t`` runs with seed ``cfg.seed + t``."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    flags, rounds = [], []
    max_bits = 0
    for t in range(trials):
        try:
            tr = run(g, factory, cfg.with_seed(cfg.seed + t))
        except SimulationFault as exc:
            raise TrialFault(t, exc) from exc
        flags.append(tr.reject)
        rounds.append(tr.rounds_used)
        max_bits = max(max_bits, tr.max_message_bits)
        if on_transcript is not None:
            on_transcript(t, tr)
    rejects = sum(flags)
    return RejectionStats(
        trials=trials,
        rejects=rejects,
        reject_fraction=rejects / trials,
        mean_rounds=sum(rounds) / trials,
        max_congestion_observed=max_bits,
        rounds=rounds,
        reject_flags=flags,
    )
