"""Command-line entry point.

    congest-testing run     --algorithm triangle --graph k3.txt --epsilon 0.5 --seed 7
    congest-testing trials  --algorithm cycle --graph g.txt --epsilon 0.25 --trials 300
    congest-testing gen     --kind far --property cycle_free --n 512 --epsilon 0.25 --output g.txt
    congest-testing oracle  --graph c5.txt --property bipartite --epsilon 0.04 --model general

Every command prints one JSON report (sorted keys) to stdout, or writes it to
``--output`` for run/trials/oracle.  Exit status: 0 on success, 1 on a
simulation fault or oracle budget error, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .bipartite import BipartiteParams, BipartiteTester, DegreeBoundError
from .cycle import CycleParams, CycleTester
from .emulation import CheckerContractError, Emulation, EmulationParams, get_checker
from .generators import (CertificationFailed, CycleBudgetExceeded, LowerBoundParams,
                         far_instance, gnm, gnp, lower_bound_instance, random_bounded_degree)
from .graph import GraphParseError, read_graph, write_graph
from .oracles import MODELS, PROPERTIES, FarnessCertificate, OracleBudgetExceeded, certify, recheck
from .sim import SimConfig, Simulation, SimulationFault, TrialFault, run_trials
from .triangle import TriangleParams, TriangleTester, as_fraction

ALGORITHMS = ("emulate", "triangle", "bipartite", "cycle")
GEN_KINDS = ("gnp", "gnm", "bounded", "lower-bound", "far")

REPORT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "version"],
    "properties": {
        "command": {"enum": ["run", "trials", "gen", "oracle"]},
        "version": {"type": "string"},
        "algorithm": {"enum": list(ALGORITHMS)},
        "graph": {
            "type": "object",
            "required": ["path", "n", "m"],
            "properties": {
                "path": {"type": "string"},
                "n": {"type": "integer", "minimum": 0},
                "m": {"type": "integer", "minimum": 0},
            },
        },
        "params": {"type": "object"},
        "seed": {"type": "integer"},
        "transcript": {
            "type": "object",
            "required": ["rounds_used", "reject", "per_round_messages",
                         "max_message_bits", "verdict_histogram"],
            "properties": {
                "rounds_used": {"type": "integer", "minimum": 1},
                "reject": {"type": "boolean"},
                "per_round_messages": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "max_message_bits": {"type": "integer", "minimum": 0},
                "bandwidth_bits": {"type": "integer", "minimum": 0},
                "verdict_histogram": {
                    "type": "object",
                    "required": ["accept", "reject", "undecided"],
                    "additionalProperties": {"type": "integer", "minimum": 0},
                },
            },
        },
        "stats": {
            "type": "object",
            "required": ["trials", "rejects", "reject_fraction", "mean_rounds",
                         "max_congestion_observed"],
            "properties": {
                "trials": {"type": "integer", "minimum": 1},
                "rejects": {"type": "integer", "minimum": 0},
                "reject_fraction": {"type": "number", "minimum": 0, "maximum": 1},
                "mean_rounds": {"type": "number", "minimum": 0},
                "max_congestion_observed": {"type": "integer", "minimum": 0},
                "sigma": {"type": "number", "minimum": 0},
                "rounds": {"type": "array", "items": {"type": "integer"}},
            },
        },
        "certificate": {
            "type": "object",
            "required": ["property", "distance", "model", "normalizer", "method", "epsilon_star"],
            "properties": {
                "property": {"enum": list(PROPERTIES)},
                "distance": {"type": "integer", "minimum": 0},
                "model": {"enum": list(MODELS)},
                "normalizer": {"type": "integer", "minimum": 0},
                "method": {"enum": ["formula", "exhaustive", "packing_bound", "decision"]},
                "epsilon_star": {"type": "number", "minimum": 0},
            },
        },
        "certificate_verified": {"type": "boolean"},
        "verdict": {"enum": ["satisfies", "epsilon_far", "neither"]},
        "construction": {"type": "object"},
        "output": {"type": "string"},
    },
}


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="congest-testing",
                                     description="Distributed property testers in a simulated CONGEST network.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def algo_flags(p):
        p.add_argument("--algorithm", required=True, choices=ALGORITHMS)
        p.add_argument("--graph", required=True, help="edge-list file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--epsilon")
        p.add_argument("--mode", choices=("scaled", "paper_faithful"))
        p.add_argument("--L", type=int, dest="L", help="walk length (bipartite, scaled mode)")
        p.add_argument("--eta", type=int, help="outer iterations (bipartite, scaled mode)")
        p.add_argument("--d", type=int, help="degree bound")
        p.add_argument("--q", type=int, help="sample size of the emulated tester")
        p.add_argument("--checker", help="'k-colorability:k' or 'perfect'")
        p.add_argument("--log-base", type=float, dest="log_base")
        p.add_argument("--force-no-deletion", action="store_true", default=None,
                       dest="force_no_deletion")
        p.add_argument("--bandwidth-multiplier", type=float, dest="bandwidth_multiplier")
        p.add_argument("--max-rounds", type=int, dest="max_rounds")
        p.add_argument("--no-halt-on-reject", action="store_false", default=None,
                       dest="halt_on_reject", help="keep running after a vertex rejects")
        p.add_argument("--params-json", dest="params_json",
                       help="JSON object (or @file) with parameter fields; flags take precedence")
        p.add_argument("--output", help="write the report here instead of stdout")

    algo_flags(sub.add_parser("run", help="one simulated execution"))
    trials = sub.add_parser("trials", help="Monte Carlo over consecutive seeds")
    algo_flags(trials)
    trials.add_argument("--trials", type=int, required=True)

    gen = sub.add_parser("gen", help="generate an instance")
    gen.add_argument("--kind", required=True, choices=GEN_KINDS)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--p", type=float)
    gen.add_argument("--m", type=int)
    gen.add_argument("--c", type=float, help="lower-bound construction: edge probability c/n")
    gen.add_argument("--cap", type=int, help="lower-bound construction: degree cap")
    gen.add_argument("--d", type=int)
    gen.add_argument("--property", choices=PROPERTIES)
    gen.add_argument("--epsilon")
    gen.add_argument("--model", choices=MODELS, default="general")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--output", required=True, help="edge-list path; a .cert.json sidecar goes next to it")

    orc = sub.add_parser("oracle", help="certify distance from a property")
    orc.add_argument("--graph", required=True)
    orc.add_argument("--property", required=True, choices=PROPERTIES)
    orc.add_argument("--epsilon", required=True)
    orc.add_argument("--model", required=True, choices=MODELS)
    orc.add_argument("--d", type=int)
    orc.add_argument("--k", type=int)
    orc.add_argument("--output")
    return parser


def _sidecar(graph_path: str) -> Path:
    return Path(graph_path + ".cert.json")


def _load_graph(path: str):
    try:
        return read_graph(path)
    except OSError as exc:
        raise UsageError(f"--graph: cannot read {path}: {exc.strerror}") from None
    except GraphParseError as exc:
        raise UsageError(f"--graph: {path}: {exc}") from None


def _merged_params(args) -> dict[str, Any]:
    params: dict[str, Any] = {}
    if args.params_json:
        text = args.params_json
        if text.startswith("@"):
            text = Path(text[1:]).read_text()
        try:
            params = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--params-json: {exc}") from None
        if not isinstance(params, dict):
            raise UsageError("--params-json must be a JSON object")
    for key in ("epsilon", "mode", "L", "eta", "d", "q", "checker", "log_base",
                "force_no_deletion", "bandwidth_multiplier", "max_rounds", "halt_on_reject"):
        value = getattr(args, key)
        if value is not None:
            params[key] = value
    return params


def _need(params: dict[str, Any], algorithm: str, *keys: str) -> None:
    missing = [k for k in keys if params.get(k) is None]
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise UsageError(f"algorithm {algorithm!r} needs {flags}")


def _epsilon(value) -> str:
    try:
        return str(as_fraction(str(value)))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"--epsilon: not a number: {value!r}") from None


def _factory(algorithm: str, g, params: dict[str, Any]):
    """Build the tester factory and the normalized parameter record for the report."""
    try:
        if algorithm == "triangle":
            _need(params, algorithm, "epsilon")
            p = TriangleParams(_epsilon(params["epsilon"]))
            return TriangleTester(g, p), {"epsilon": str(p.epsilon), "iterations": p.iterations}
        if algorithm == "cycle":
            _need(params, algorithm, "epsilon")
            p = CycleParams(_epsilon(params["epsilon"]), float(params.get("log_base", 2)),
                            bool(params.get("force_no_deletion", False)))
            return CycleTester(g, p), {"epsilon": str(p.epsilon), "log_base": p.log_base,
                                        "force_no_deletion": p.force_no_deletion}
        if algorithm == "bipartite":
            mode = params.get("mode", "scaled")
            _need(params, algorithm, "d", *(("L", "eta") if mode == "scaled" else ()))
            p = BipartiteParams(d=int(params["d"]), epsilon=_epsilon(params.get("epsilon", "0.1")),
                                mode=mode, L=params.get("L") if mode == "scaled" else None,
                                eta=params.get("eta") if mode == "scaled" else None,
                                c_K=float(params.get("c_K", 1.0)), c_L=float(params.get("c_L", 1.0)))
            tester = BipartiteTester(g, p)
            r = tester.resolved
            return tester, {"d": p.d, "epsilon": str(p.epsilon), "mode": p.mode, "L": r.L,
                            "eta": r.eta, "xi": r.xi}
        if algorithm == "emulate":
            _need(params, algorithm, "q", "checker")
            checker = get_checker(str(params["checker"]))
            p = EmulationParams(int(params["q"]), params.get("pick_probability"), params.get("edge_cap"))
            return Emulation(g, checker, p), {"q": p.q, "checker": checker.name,
                                              "pick_probability": float(p.probability(g.n)),
                                              "edge_cap": p.cap}
    except (KeyError, ValueError) as exc:
        if isinstance(exc, (DegreeBoundError, CheckerContractError)):
            raise
        raise UsageError(str(exc).strip("'\"")) from None
    raise UsageError(f"unknown algorithm {algorithm!r}")


def _sim_config(params: dict[str, Any], seed: int) -> SimConfig:
    try:
        return SimConfig(bandwidth_multiplier=float(params.get("bandwidth_multiplier", 4.0)),
                         max_rounds=int(params.get("max_rounds", 10_000_000)), seed=seed,
                         halt_on_reject=bool(params.get("halt_on_reject", True)))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _attach_certificate(report: dict[str, Any], graph_path: str, g) -> None:
    side = _sidecar(graph_path)
    if side.exists():
        cert = FarnessCertificate.from_dict(json.loads(side.read_text()))
        report["certificate"] = cert.to_dict()
        report["certificate_verified"] = recheck(g, cert)


def _cmd_algorithm(args) -> dict[str, Any]:
    g = _load_graph(args.graph)
    params = _merged_params(args)
    factory, record = _factory(args.algorithm, g, params)
    cfg = _sim_config(params, args.seed)
    report: dict[str, Any] = {
        "command": args.command,
        "algorithm": args.algorithm,
        "graph": {"path": args.graph, "n": g.n, "m": g.m},
        "params": record,
        "seed": args.seed,
        "bandwidth_multiplier": cfg.bandwidth_multiplier,
        "halt_on_reject": cfg.halt_on_reject,
    }
    if args.command == "run":
        report["transcript"] = Simulation(g, factory, cfg).run().to_dict()
    else:
        if args.trials < 1:
            raise UsageError("--trials must be at least 1")
        stats = run_trials(g, factory, cfg, args.trials)
        report["stats"] = {**stats.to_dict(), "sigma": stats.sigma(), "rounds": stats.rounds}
    _attach_certificate(report, args.graph, g)
    return report


def _cmd_gen(args) -> dict[str, Any]:
    report: dict[str, Any] = {"command": "gen", "kind": args.kind, "seed": args.seed}
    cert, verdict = None, None
    if args.kind == "gnp":
        if args.p is None:
            raise UsageError("--kind gnp needs --p")
        g = gnp(args.n, args.p, args.seed)
    elif args.kind == "gnm":
        if args.m is None:
            raise UsageError("--kind gnm needs --m")
        g = gnm(args.n, args.m, args.seed)
    elif args.kind == "bounded":
        if args.d is None:
            raise UsageError("--kind bounded needs --d")
        g = random_bounded_degree(args.n, args.d, args.seed)
    elif args.kind == "lower-bound":
        c = args.c if args.c is not None else 1000.0
        cap = args.cap if args.cap is not None else 2 * int(c)
        g, log = lower_bound_instance(LowerBoundParams(args.n, c, cap), args.seed)
        report["construction"] = log.to_dict()
    else:
        if args.property is None or args.epsilon is None:
            raise UsageError("--kind far needs --property and --epsilon")
        if args.property == "k_colorable":
            raise UsageError("--property: no far-instance recipe for k_colorable")
        verdict = "epsilon_far"
        g, cert, used = far_instance(args.property, args.n, _epsilon(args.epsilon), args.model,
                                     args.seed, d=args.d)
        report["seed_used"] = used
    if cert is None and args.property is not None and args.epsilon is not None:
        try:
            cert, verdict = certify(g, args.property, _epsilon(args.epsilon), args.model, d=args.d)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    write_graph(g, args.output)
    report["graph"] = {"path": args.output, "n": g.n, "m": g.m}
    report["output"] = args.output
    if cert is not None:
        _sidecar(args.output).write_text(json.dumps(cert.to_dict(), sort_keys=True, indent=2) + "\n")
        report["certificate"] = cert.to_dict()
        report["verdict"] = verdict
    return report


def _cmd_oracle(args) -> dict[str, Any]:
    g = _load_graph(args.graph)
    try:
        cert, verdict = certify(g, args.property, _epsilon(args.epsilon), args.model, d=args.d, k=args.k)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return {
        "command": "oracle",
        "graph": {"path": args.graph, "n": g.n, "m": g.m},
        "certificate": cert.to_dict(),
        "verdict": verdict,
    }


def _emit(report: dict[str, Any], output: str | None) -> None:
    report["version"] = __version__
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("run", "trials"):
            _emit(_cmd_algorithm(args), args.output)
        elif args.command == "gen":
            _emit(_cmd_gen(args), None)
        else:
            _emit(_cmd_oracle(args), args.output)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (SimulationFault, TrialFault, DegreeBoundError, CheckerContractError,
            OracleBudgetExceeded, CycleBudgetExceeded, CertificationFailed) as exc:
        print(f"{parser.prog}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
