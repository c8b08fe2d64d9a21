"""Command line entry point: fixtures, certificates, embeddings and reports.

Exit codes come in classes: 0 success, 10-19 mathematical outcomes
(refuted, failed, unknown), 20-29 input problems (unreadable or malformed
files, bad parameters).  argparse itself exits with 2 on usage errors.
Every command prints deterministic JSON; wall-clock timings live under a
separate ``timings`` key so reports can be compared byte for byte without it.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import embedder, homomorphism, hypercore, loosetree, robustgraph
from .perms import parse_perm
from .hypercore import FormatError, Hypergraph, ParameterError
from .loosetree import LooseTree, TreeGenerationError

EXIT_OK = 0
EXIT_REFUTED = 10
EXIT_FAILED = 11
EXIT_UNKNOWN = 12
EXIT_IO = 20
EXIT_PARSE = 21
EXIT_PARAMETER = 22

SCHEMA_VERSION = 1

log = logging.getLogger("looseembed")


class InputError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# -- configuration ---------------------------------------------------------------


def rational(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError(f"{text} is outside [0, 1]")
    return value


@dataclass
class ExperimentConfig:
    seed: int = 0
    k: int | None = None
    n: int | None = None
    gamma: Fraction | None = None
    alpha: Fraction = Fraction(0)
    eta: Fraction = Fraction(1, 10)
    zeta: Fraction | None = None
    theta: Fraction | None = None
    cap_radius: int | None = None
    workers: int = 1

    def validate(self) -> None:
        for name in ("gamma", "alpha", "eta", "zeta", "theta"):
            value = getattr(self, name)
            if value is not None and not 0 <= value <= 1:
                raise InputError(f"{name} = {value} is outside [0, 1]", EXIT_PARAMETER)
        if self.workers < 1:
            raise InputError("--workers must be positive", EXIT_PARAMETER)

    def hierarchy_warnings(self, n: int | None = None) -> list[str]:
        """The constants are meant to satisfy 1/n << alpha << eta << gamma
        (and theta << zeta << alpha); desk-scale runs usually do not."""
        n = n or self.n
        chain = []
        if n:
            chain.append(("1/n", Fraction(1, n)))
        if self.theta is not None:
            chain.append(("theta", self.theta))
        if self.zeta is not None:
            chain.append(("zeta", self.zeta))
        chain.append(("alpha", self.alpha))
        chain.append(("eta", self.eta))
        if self.gamma is not None:
            chain.append(("gamma", self.gamma))
        out = []
        for (a, x), (b, y) in zip(chain, chain[1:]):
            if not x < y:
                out.append(f"hierarchy {a} << {b} violated ({x} >= {y})")
        return out

    def to_json(self) -> dict:
        return {key: (str(value) if isinstance(value, Fraction) else value) for key, value in sorted(vars(self).items())}


def config_from(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig(
        seed=args.seed,
        k=getattr(args, "k", None),
        n=getattr(args, "n", None),
        gamma=getattr(args, "gamma", None),
        alpha=getattr(args, "alpha", None) or Fraction(0),
        eta=getattr(args, "eta", None) or Fraction(1, 10),
        zeta=getattr(args, "zeta", None),
        theta=getattr(args, "theta", None),
        cap_radius=getattr(args, "cap_radius", None),
        workers=args.workers,
    )
    config.validate()
    return config


def warn_hierarchy(config: ExperimentConfig, n: int | None) -> list[str]:
    warnings = config.hierarchy_warnings(n)
    for line in warnings:
        log.warning(line)
    return warnings


# -- graph and tree specs -------------------------------------------------------------


def _ints(parts: Sequence[str], spec: str) -> list[int]:
    try:
        return [int(p) for p in parts]
    except ValueError as exc:
        raise InputError(f"{spec!r} is neither a file nor a known fixture name", EXIT_IO) from exc


def graph_fixture(family: str, k: int, n: int, seed: int = 0, gamma: Fraction | None = None,
                  part: int | None = None) -> Hypergraph:
    if family == "complete":
        return hypercore.complete_graph(k, n)
    if family == "two-clique":
        return hypercore.two_clique_graph(k, n, part)
    if family in ("parity", "parity-pure"):
        first = n // 2 if part is None else part
        return hypercore.parity_graph(k, first, n - first, mixed=family == "parity")
    if family == "random-threshold":
        threshold = Fraction(1, 2) + (gamma if gamma is not None else Fraction(35, 100))
        return hypercore.random_threshold_graph(k, n, threshold, seed)
    raise InputError(f"unknown graph family {family!r}", EXIT_PARAMETER)


def load_graph_spec(spec: str) -> Hypergraph:
    """A file path, or a fixture name such as complete_3_7, two-clique_3_13 or parity_4_4_4."""
    path = Path(spec)
    if path.exists():
        try:
            return hypercore.load_graph(str(path))
        except FormatError as exc:
            raise InputError(f"{spec}: {exc}", EXIT_PARSE) from exc
        except OSError as exc:
            raise InputError(f"{spec}: {exc}", EXIT_IO) from exc
    family, *rest = spec.replace("two_clique", "two-clique").split("_")
    numbers = _ints(rest, spec)
    if family in ("complete", "two-clique") and len(numbers) == 2:
        return graph_fixture(family, numbers[0], numbers[1])
    if family in ("parity", "parity-pure") and len(numbers) == 3:
        k, a, b = numbers
        return hypercore.parity_graph(k, a, b, mixed=family == "parity")
    raise InputError(f"{spec!r} is neither a file nor a known fixture name", EXIT_IO)


def tree_fixture(family: str, k: int, n: int | None, seed: int, max_degree: int, depth: int | None) -> LooseTree:
    if family == "path":
        if n is None or (n - 1) % (k - 1):
            raise InputError("a path needs n = 1 mod (k-1)", EXIT_PARAMETER)
        return loosetree.loose_path(k, (n - 1) // (k - 1))
    if family == "binary":
        return loosetree.binary_tree(k, depth if depth is not None else 2)
    if family == "random":
        if n is None:
            raise InputError("a random tree needs --n", EXIT_PARAMETER)
        return loosetree.random_tree(k, n, max_degree, seed)
    raise InputError(f"unknown tree family {family!r}", EXIT_PARAMETER)


def load_tree_spec(spec: str) -> LooseTree:
    """A file path, or path_K_N, binary_K_R or random_K_N_DELTA_SEED."""
    path = Path(spec)
    if path.exists():
        try:
            return loosetree.load_tree(str(path))
        except FormatError as exc:
            raise InputError(f"{spec}: {exc}", EXIT_PARSE) from exc
        except OSError as exc:
            raise InputError(f"{spec}: {exc}", EXIT_IO) from exc
    family, *rest = spec.split("_")
    numbers = _ints(rest, spec)
    if family == "path" and len(numbers) == 2:
        return tree_fixture("path", numbers[0], numbers[1], 0, 2, None)
    if family == "binary" and len(numbers) == 2:
        return tree_fixture("binary", numbers[0], None, 0, 2, numbers[1])
    if family == "random" and len(numbers) == 4:
        k, n, delta, seed = numbers
        return tree_fixture("random", k, n, seed, delta, None)
    raise InputError(f"{spec!r} is neither a file nor a known tree fixture", EXIT_IO)


def parse_edge(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.replace(" ", "").split(",") if t)
    except ValueError as exc:
        raise InputError(f"bad vertex list {text!r}", EXIT_PARSE) from exc


def parse_permutation(text: str, k: int) -> tuple[int, ...]:
    """Cycle notation such as (12)(34), or one-line form such as 2,1,3."""
    try:
        if "(" in text or text.strip() == "id":
            return parse_perm(text, k)
    except ValueError as exc:
        raise InputError(str(exc), EXIT_PARSE) from exc
    perm = parse_edge(text)
    if sorted(perm) != list(range(1, k + 1)):
        raise InputError(f"{text!r} is not a permutation of 1..{k}", EXIT_PARSE)
    return perm


# -- output ------------------------------------------------------------------------------


def _jsonable(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float) and value == float("inf"):
        return None
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = [_jsonable(v) for v in value]
        return sorted(items) if isinstance(value, (set, frozenset)) else items
    return value


def emit(args: argparse.Namespace, command: str, result: dict, timings: dict, warnings: Sequence[str] = ()) -> None:
    document = {
        "schema": f"looseembed.{command}/{SCHEMA_VERSION}",
        "config": {"seed": args.seed},
        "result": _jsonable(result),
        "warnings": list(warnings),
        "timings": {key: round(value, 6) for key, value in sorted(timings.items())},
    }
    text = json.dumps(document, sort_keys=True, indent=2) + "\n"
    out = getattr(args, "out", None) or getattr(args, "report", None)
    if out and command != "gen" and command != "tree-gen":
        try:
            Path(out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise InputError(f"{out}: {exc}", EXIT_IO) from exc
    sys.stdout.write(text)


# -- commands -------------------------------------------------------------------------------


def cmd_gen(args) -> int:
    config = config_from(args)
    clock = time.perf_counter()
    graph = graph_fixture(args.family, args.k, args.n, config.seed, config.gamma, args.part)
    if args.out:
        try:
            hypercore.save_graph(graph, args.out)
        except OSError as exc:
            raise InputError(f"{args.out}: {exc}", EXIT_IO) from exc
    result = {"family": args.family, "k": graph.k, "n": graph.n, "edges": len(graph.edges), "file": args.out}
    if not args.out:
        result["graph"] = graph.to_json()
    emit(args, "gen", result, {"total": time.perf_counter() - clock})
    return EXIT_OK


def cmd_certify(args) -> int:
    config = config_from(args)
    graph = load_graph_spec(args.graph)
    warnings = warn_hierarchy(config, graph.n)
    if config.workers > 1:
        log.info("certification runs sequentially; --workers is ignored")
    clock = time.perf_counter()
    cert = robustgraph.certify_robust(graph, config.eta, samples=args.samples, seed=config.seed,
                                      alpha=config.alpha, cap=config.cap_radius)
    result = cert.to_json()
    emit(args, "certify", result, {"total": time.perf_counter() - clock}, warnings)
    if cert.status == "refuted":
        return EXIT_REFUTED
    return EXIT_OK


def cmd_embed(args) -> int:
    config = config_from(args)
    graph = load_graph_spec(args.graph)
    tree = load_tree_spec(args.tree)
    warnings = warn_hierarchy(config, graph.n)
    options = {}
    if args.mode == "pipeline" and args.eta is not None:
        options["eta"] = config.eta
    if args.mode == "oracle" and args.node_limit:
        options["node_limit"] = args.node_limit
    outcome = embedder.embed_spanning(graph, tree, args.mode, **options)
    emit(args, "embed", outcome.to_json(), outcome.timings, warnings)
    if outcome.status == "embedded":
        return EXIT_OK
    return EXIT_UNKNOWN if outcome.status == "unknown" else EXIT_FAILED


def cmd_report(args) -> int:
    graph = load_graph_spec(args.graph)
    clock = time.perf_counter()
    result: dict = {"k": graph.k, "n": graph.n, "edges": len(graph.edges)}
    for ell in range(1, graph.k):
        rep = hypercore.min_degree(graph, ell)
        result[f"min_degree_{ell}"] = {"count": rep.count, "relative": str(rep.relative), "at": list(rep.subset)}
    result["tight_components"] = sorted(len(c) for c in hypercore.tight_components(graph))
    robust = robustgraph.build_gstar(graph)
    result["gstar_edges"] = len(robust.gstar.edges)
    result["gstar_ties"] = bool(robust.ties)
    if args.tree:
        tree = load_tree_spec(args.tree)
        result["tree"] = {"vertices": len(tree), "edges": len(tree.edges), "max_degree": tree.max_degree(),
                          "spanning_size": len(tree) == graph.n}
    emit(args, "report", result, {"total": time.perf_counter() - clock})
    return EXIT_OK


def cmd_tree(args) -> int:
    clock = time.perf_counter()
    if args.tree_command == "gen":
        tree = tree_fixture(args.family, args.k, args.n, args.seed, args.max_degree, args.depth)
        if args.out:
            try:
                loosetree.save_tree(tree, args.out)
            except OSError as exc:
                raise InputError(f"{args.out}: {exc}", EXIT_IO) from exc
        result = {"vertices": len(tree), "edges": len(tree.edges), "max_degree": tree.max_degree(), "file": args.out}
        if not args.out:
            result["tree"] = tree.to_json()
        emit(args, "tree-gen", result, {"total": time.perf_counter() - clock})
        return EXIT_OK
    tree = load_tree_spec(args.tree)
    if args.tree_command == "validate":
        verdict = loosetree.validate(tree)
        emit(args, "tree-validate", {"valid": verdict.valid, "reason": verdict.reason}, {"total": time.perf_counter() - clock})
        return EXIT_OK if verdict.valid else EXIT_FAILED
    parts = loosetree.decompose(tree, args.size, args.max_degree)
    result = {
        "pieces": [{"root": p.root, "vertices": len(p), "edges": [list(e) for e in p.edges]} for p in parts.pieces],
        "attach": list(parts.attach),
    }
    emit(args, "tree-decompose", result, {"total": time.perf_counter() - clock})
    return EXIT_OK


def cmd_reach(args) -> int:
    config = config_from(args)
    graph = load_graph_spec(args.graph)
    edge = parse_edge(args.edge)
    clock = time.perf_counter()
    reach = homomorphism.reachability(graph, edge, config.cap_radius)
    emit(args, "reach", reach.to_json(), {"total": time.perf_counter() - clock})
    return EXIT_OK


def cmd_rotate(args) -> int:
    config = config_from(args)
    graph = load_graph_spec(args.graph)
    edge = parse_edge(args.edge)
    sigma = parse_permutation(args.sigma, len(edge)) if args.sigma else None
    pi = parse_permutation(args.pi, len(edge)) if args.pi else None
    clock = time.perf_counter()
    outcome = homomorphism.rotatability(graph, edge, sigma, config.cap_radius, args.rotation_mode, pi, args.index)
    emit(args, "rotate", outcome.to_json(), {"total": time.perf_counter() - clock})
    return EXIT_OK if outcome else EXIT_REFUTED


def cmd_robust(args) -> int:
    if args.robust_command == "certify":
        return cmd_certify(args)
    config = config_from(args)
    graph = load_graph_spec(args.graph)
    clock = time.perf_counter()
    robust = robustgraph.build_gstar(graph)
    if args.robust_command == "gstar":
        emit(args, "robust-gstar", robust.to_json(), {"total": time.perf_counter() - clock})
        return EXIT_OK
    labels = robustgraph.build_labels(graph, robust, config.alpha)
    emit(args, "robust-labels", labels.to_json(), {"total": time.perf_counter() - clock})
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------------


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1, help="accepted for all commands; the modules run sequentially")
    parser.add_argument("--out", help="also write the JSON report (or the generated file for gen) here")


def _params(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--gamma", type=rational, help="degree excess over 1/2")
    parser.add_argument("--alpha", type=rational, help="perturbation fraction")
    parser.add_argument("--eta", type=rational, help="robustness / split fraction")
    parser.add_argument("--zeta", type=rational)
    parser.add_argument("--theta", type=rational)
    parser.add_argument("--cap-radius", type=int, dest="cap_radius")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="looseembed", description="Loose hypertree embedding experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a graph fixture")
    _common(p)
    _params(p)
    p.add_argument("--family", required=True, choices=["complete", "two-clique", "parity", "parity-pure", "random-threshold"])
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--part", type=int, help="size of the first part (two-clique, parity)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("certify", help="certify eta-robustness of G*")
    _common(p)
    _params(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--samples", type=int, default=20)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("embed", help="spanning embedding of a tree")
    _common(p)
    _params(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--tree", required=True)
    p.add_argument("--mode", choices=["pipeline", "oracle"], default="pipeline")
    p.add_argument("--report", help="alias of --out")
    p.add_argument("--node-limit", type=int, dest="node_limit")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("report", help="structural summary of a graph (and tree)")
    _common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--tree")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("tree", help="generate, validate or decompose loose trees")
    tree_sub = p.add_subparsers(dest="tree_command", required=True)
    q = tree_sub.add_parser("gen")
    _common(q)
    q.add_argument("--family", choices=["path", "binary", "random"], required=True)
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--n", type=int)
    q.add_argument("--depth", type=int)
    q.add_argument("--max-degree", type=int, default=2, dest="max_degree")
    q = tree_sub.add_parser("validate")
    _common(q)
    q.add_argument("--tree", required=True)
    q = tree_sub.add_parser("decompose")
    _common(q)
    q.add_argument("--tree", required=True)
    q.add_argument("--size", type=int, required=True)
    q.add_argument("--max-degree", type=int, dest="max_degree")
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser("reach", help="reach levels towards an edge")
    _common(p)
    _params(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--edge", required=True)
    p.set_defaults(func=cmd_reach)

    p = sub.add_parser("rotate", help="rotation radius of an edge")
    _common(p)
    _params(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--edge", required=True)
    p.add_argument("--sigma", help="cycle notation like (12)(34) or one-line like 2,1,3,4")
    p.add_argument("--pi", help="same forms as --sigma")
    p.add_argument("--index", type=int)
    p.add_argument("--mode", dest="rotation_mode", default="star", choices=["star", "round", "bracket", "index", "full"])
    p.set_defaults(func=cmd_rotate)

    p = sub.add_parser("robust", help="G*, labels or the full certificate")
    robust_sub = p.add_subparsers(dest="robust_command", required=True)
    for name in ("certify", "gstar", "labels"):
        q = robust_sub.add_parser(name)
        _common(q)
        _params(q)
        q.add_argument("--graph", required=True)
        q.add_argument("--samples", type=int, default=20)
    p.set_defaults(func=cmd_robust)
    return parser


def _configure_logging() -> None:
    level = os.environ.get("LOOSETREE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        log.error("%s", exc)
        return exc.code
    except (ParameterError, TreeGenerationError) as exc:
        log.error("%s", exc)
        return EXIT_PARAMETER
    except FormatError as exc:
        log.error("%s", exc)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
