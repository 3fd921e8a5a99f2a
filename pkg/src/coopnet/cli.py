"""Command-line entry point: ``coopnet {gen,simulate,sweep,detect,analyze,predict}``.

Exit codes: 0 success, 1 usage/config error, 2 data or I/O error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import stats
from ._parallel import WORKERS_ENV, default_workers
from .community import (
    CommunityRecord,
    community_records,
    detect_lpa,
    detect_slpa,
    filter_cover,
    read_cover,
    write_cover,
)
from .errors import ConfigError, DataError, InvariantError, UndefinedMetricError
from .game import GameConfig, SimulationResult, simulate, sweep_temptation
from .generators import KINDS, GeneratorSpec, generate
from .graph import NetworkGraph, compute_properties, read_edge_list, write_edge_list
from .predict import MODEL_KINDS, evaluate, fit_model, read_feature_table, split
from .reports import config_header, read_csv, write_csv, write_json
from .walktrap import detect_walktrap

log = logging.getLogger("coopnet")

ALGORITHMS = ("slpa", "walktrap", "lpa")
RECORD_COLUMNS = ["community_id", "algorithm", "size", "density", "avg_degree", "degree_std",
                  "cooperativity", "label", "network"]
NETWORK_COLUMNS = ["network", "size", "edge_count", "density", "avg_degree", "degree_std",
                   "clustering_coeff", "cooperativity"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- sources

def _parse_generator(text: str) -> GeneratorSpec:
    """``kind:key=value,...`` e.g. ``barabasi_albert:n=500,k=2,seed=1``."""
    kind, _, rest = text.partition(":")
    kind = "planted_cliques" if kind == "planted" else kind
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise ConfigError(f"bad generator parameter {item!r}")
        key = {"size": "clique_size"}.get(key, key)
        params[key] = float(value) if key == "p" else int(value)
    try:
        return GeneratorSpec(kind=kind, **params)
    except TypeError as exc:
        raise ConfigError(f"bad generator parameters: {exc}") from None


def _load_network(path: str | None, generator: str | None) -> tuple[NetworkGraph, dict]:
    if (path is None) == (generator is None):
        raise ConfigError("give exactly one network source: --input or --generator")
    if path is not None:
        if not Path(path).exists():
            raise ConfigError(f"input file not found: {path}")
        return read_edge_list(path), {"input": str(path)}
    spec = _parse_generator(generator)
    return generate(spec), {"generator": spec.as_dict()}


def _add_source(p, multiple=False):
    if multiple:
        p.add_argument("--input", action="append", help="edge-list file (repeatable)")
    else:
        p.add_argument("--input", help="edge-list file")
    p.add_argument("--generator", help="synthetic source, e.g. barabasi_albert:n=500,k=2,seed=1")


# ---------------------------------------------------------------- game

def _add_game(p, with_b=True):
    if with_b:
        p.add_argument("--b", type=float, default=1.5, help="temptation to defect (default 1.5)")
    p.add_argument("--realizations", type=int, default=200)
    p.add_argument("--min-iters", type=int, default=1000)
    p.add_argument("--max-iters", type=int, default=9000)
    p.add_argument("--window", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=("random", "all-c", "all-d"), default="random",
                   help="initial strategies (default: half cooperators at random)")
    p.add_argument("--check-invariants", action="store_true",
                   help="assert probability and cooperativity bounds while running")
    p.add_argument("--workers", type=int, default=None,
                   help=f"worker processes (default ${WORKERS_ENV} or 1)")


def _game_config(args, g: NetworkGraph, b: float = 1.5) -> GameConfig:
    init = None
    if args.init == "all-c":
        init = (1,) * g.node_count
    elif args.init == "all-d":
        init = (0,) * g.node_count
    cfg = GameConfig(
        b=getattr(args, "b", b),
        min_iterations=args.min_iters,
        window=args.window,
        max_iterations=args.max_iters,
        realizations=args.realizations,
        master_seed=args.seed,
        initial_strategies=init,
        check_invariants=args.check_invariants,
    )
    cfg.validate()
    return cfg


def _game_echo(cfg: GameConfig, init: str) -> dict:
    d = cfg.as_dict()
    d["initial_strategies"] = init
    return d


def _simulation_body(g: NetworkGraph, res: SimulationResult) -> dict:
    return {
        "graph": {"nodes": g.node_count, "edges": g.edge_count},
        "result": {
            "network_cooperativity": res.network_cooperativity,
            "realization_std": res.realization_std,
            "agent_cooperativity": dict(zip(g.labels, res.agent_cooperativity.tolist())),
            "realizations": [
                {
                    "index": i,
                    "seed": res.realization_seeds[i],
                    "iterations": res.per_realization_iterations[i],
                    "converged": res.converged_flags[i],
                    "cooperativity": float(res.realization_cooperativity[i]),
                }
                for i in range(res.realizations_run)
            ],
        },
    }


def _workers(args) -> int:
    return args.workers if args.workers is not None else default_workers()


def cmd_simulate(args) -> None:
    g, source = _load_network(args.input, args.generator)
    cfg = _game_config(args, g)
    res = simulate(g, cfg, workers=_workers(args))
    config = {**source, "game": _game_echo(cfg, args.init)}
    write_json(args.out, "simulate", config, _simulation_body(g, res))
    print(f"network cooperativity {res.network_cooperativity:.6f} "
          f"({cfg.realizations} realizations, seed {cfg.master_seed}) -> {args.out}")


def _b_range(text: str) -> list[float]:
    try:
        start, end, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise ConfigError("--b-range must look like start:end:step") from None
    if not start < end or not step > 0:
        raise ConfigError("--b-range needs start < end and step > 0")
    count = int(np.floor((end - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(count)]


def cmd_sweep(args) -> None:
    g, source = _load_network(args.input, args.generator)
    values = _b_range(args.b_range)
    cfg = _game_config(args, g, b=values[0])
    points = sweep_temptation(g, cfg, values, workers=_workers(args))
    config = {**source, "game": _game_echo(cfg, args.init), "b_values": values}
    write_csv(args.out, "sweep", config, ["b", "mean_cooperativity", "std_cooperativity"],
              ({"b": p.b, "mean_cooperativity": p.mean, "std_cooperativity": p.std} for p in points))
    print(f"{len(points)} temptation values -> {args.out}")


# ---------------------------------------------------------------- communities

def _detect(g: NetworkGraph, algorithm: str, args):
    if algorithm == "slpa":
        return detect_slpa(g, iterations=args.slpa_iterations, threshold=args.slpa_threshold, seed=args.seed)
    if algorithm == "walktrap":
        return detect_walktrap(g, walk_length=args.walk_length)
    if algorithm == "lpa":
        return detect_lpa(g, seed=args.seed)
    raise ConfigError(f"unknown algorithm {algorithm!r}")


def _detect_params(args) -> dict:
    return {
        "slpa_iterations": args.slpa_iterations,
        "slpa_threshold": args.slpa_threshold,
        "walk_length": args.walk_length,
        "seed": args.seed,
    }


def _add_detect_params(p):
    p.add_argument("--slpa-iterations", type=int, default=100)
    p.add_argument("--slpa-threshold", type=float, default=0.15)
    p.add_argument("--walk-length", type=int, default=4)


def cmd_detect(args) -> None:
    g, source = _load_network(args.input, args.generator)
    cover = _detect(g, args.algorithm, args)
    config = {**source, "algorithm": args.algorithm, **_detect_params(args)}
    with open(args.out, "w", encoding="utf-8") as fh:
        write_cover(cover, g, fh, header=config_header("detect", config))
    print(f"{args.algorithm}: {len(cover)} communities -> {args.out}")


def _load_simulation(path: str, g: NetworkGraph) -> tuple[SimulationResult, dict]:
    if not Path(path).exists():
        raise ConfigError(f"simulation report not found: {path}")
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        agent_map = doc["result"]["agent_cooperativity"]
        network = float(doc["result"]["network_cooperativity"])
    except (KeyError, TypeError):
        raise DataError(f"{path}: not a simulation report") from None
    if set(agent_map) != set(g.labels):
        raise DataError(f"{path}: simulation report does not match the network's nodes")
    agent = np.array([agent_map[lab] for lab in g.labels], dtype=float)
    reals = doc["result"].get("realizations", [])
    res = SimulationResult(
        network_cooperativity=network,
        agent_cooperativity=agent,
        realization_cooperativity=np.array([r["cooperativity"] for r in reals]),
        realizations_run=len(reals),
        per_realization_iterations=tuple(r["iterations"] for r in reals),
        converged_flags=tuple(r["converged"] for r in reals),
        realization_seeds=tuple(r["seed"] for r in reals),
    )
    return res, doc.get("config", {})


def _correlation_rows(group: str, columns: dict[str, np.ndarray]) -> list[dict]:
    n = len(next(iter(columns.values())))
    names = list(columns)
    if n < 2:
        return [{"group": group, "property": name, **{c: "" for c in names},
                 "note": "insufficient data (n < 2)"} for name in names]
    names, mat = stats.correlation_matrix(columns)
    rows = []
    for i, name in enumerate(names):
        undefined = [names[j] for j in range(len(names)) if np.isnan(mat[i, j])]
        note = "undefined correlation (constant series)" if undefined else ""
        rows.append({"group": group, "property": name, **dict(zip(names, mat[i].tolist())), "note": note})
    return rows


def cmd_analyze(args) -> None:
    inputs = args.input or []
    reports = args.report or []
    if args.generator:
        if inputs:
            raise ConfigError("give exactly one network source: --input or --generator")
        inputs = [None]
    if not inputs:
        raise ConfigError("give a network via --input or --generator")
    if len(reports) != len(inputs):
        raise ConfigError("give one --report per network")
    if args.cover and len(inputs) != 1:
        raise ConfigError("--cover is only supported with a single network")
    algorithms = args.algorithm or ([] if args.cover else ["walktrap"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    record_rows, network_rows, sources = [], [], []
    per_algorithm: dict[str, list[CommunityRecord]] = {}
    for idx, (path, report) in enumerate(zip(inputs, reports)):
        g, source = _load_network(path, args.generator if path is None else None)
        name = Path(path).stem if path else f"net{idx}"
        sim, sim_cfg = _load_simulation(report, g)
        sources.append({**source, "report": str(report), "simulation_config": sim_cfg})
        props = compute_properties(g)
        network_rows.append({"network": name, **props.as_dict(), "cooperativity": sim.network_cooperativity})

        covers = [_detect(g, a, args) for a in algorithms]
        for cpath in args.cover or []:
            if not Path(cpath).exists():
                raise ConfigError(f"cover file not found: {cpath}")
            covers.append(read_cover(cpath, g, algorithm=Path(cpath).stem))
        for cover in covers:
            cover.validate(g)
            if not args.no_filter:
                cover = filter_cover(cover, g)
            records = community_records(cover, g, sim)
            per_algorithm.setdefault(cover.algorithm, []).extend(records)
            record_rows += [{**r.row(), "network": name} for r in records]

    config = {
        "networks": sources,
        "algorithms": algorithms,
        "covers": [str(c) for c in args.cover or []],
        "filter": not args.no_filter,
        **_detect_params(args),
    }
    write_csv(out / "communities.csv", "analyze", config, RECORD_COLUMNS, record_rows)

    props = list(CommunityRecord.FEATURES) + ["cooperativity"]
    corr_rows = []
    for algo, records in per_algorithm.items():
        cols = {p: np.array([getattr(r, p) for r in records], dtype=float) for p in props}
        corr_rows += _correlation_rows(algo, cols)
    write_csv(out / "correlations.csv", "analyze", config, ["group", "property", *props, "note"], corr_rows)

    write_csv(out / "networks.csv", "analyze", config, NETWORK_COLUMNS, network_rows)
    if len(network_rows) >= 2:
        net_props = NETWORK_COLUMNS[1:]
        cols = {p: np.array([r[p] for r in network_rows], dtype=float) for p in net_props}
        write_csv(out / "network_correlations.csv", "analyze", config,
                  ["group", "property", *net_props, "note"], _correlation_rows("networks", cols))
    print(f"{len(record_rows)} community records, {len(per_algorithm)} algorithm(s) -> {out}")
    for row in corr_rows:
        if row["note"] and row["property"] == "cooperativity":
            print(f"  {row['group']}: {row['note']}")


# ---------------------------------------------------------------- prediction

MIN_PREDICT_ROWS = 10


def cmd_predict(args) -> None:
    if not Path(args.features).exists():
        raise ConfigError(f"feature file not found: {args.features}")
    binarize = args.binarize if args.binarize == "label" else stats.parse_binarize(args.binarize)
    models = args.model or list(MODEL_KINDS)
    dataset = args.dataset or Path(args.features).stem

    raw = read_csv(args.features)
    groups = [None]
    if not args.pooled and raw and "algorithm" in raw[0]:
        groups = sorted({r["algorithm"] for r in raw})

    rows, reports = [], []
    importance_names: list[str] = []
    for group in groups:
        table = read_feature_table(args.features, binarize=binarize, group=group)
        label = group or "pooled"
        if len(table) < MIN_PREDICT_ROWS:
            raise DataError(f"too few rows for {label}: {len(table)} < {MIN_PREDICT_ROWS}")
        two_classes = len(np.unique(table.labels)) == 2
        if not two_classes and any(m != "ridge" for m in models):
            raise DataError(f"single-class target for {label}: binarization gave one class only")
        train, test = split(table, args.split, seed=args.seed, stratified=two_classes)
        for kind in models:
            params = {"n_trees": args.trees} if kind == "extratrees" else {}
            model = fit_model(kind, train, seed=args.seed, **params)
            rep = evaluate(model, test, n_train=len(train), split_seed=args.seed)
            row = {"dataset": dataset, "algorithm": label, **rep.row()}
            if rep.feature_importances:
                for k, v in rep.feature_importances.items():
                    row[f"importance_{k}"] = v
                    if f"importance_{k}" not in importance_names:
                        importance_names.append(f"importance_{k}")
            rows.append(row)
            reports.append({"dataset": dataset, "algorithm": label, **rep.__dict__})

    config = {
        "features": str(args.features),
        "models": models,
        "binarize": args.binarize,
        "split": args.split,
        "stratified": "when both classes present",
        "seed": args.seed,
        "trees": args.trees,
        "pooled": args.pooled,
        "dataset": dataset,
    }
    fields = ["dataset", "algorithm", "model", "task", "n_train", "n_test",
              "prediction_accuracy", "mse", "rmse", *importance_names]
    write_csv(args.out, "predict", config, fields, rows)
    write_json(Path(args.out).with_suffix(".json"), "predict", config, {"reports": reports})
    for r in rows:
        metric = (f"PA {r['prediction_accuracy']:.3f} MSE {r['mse']:.3f}" if r["task"] == "binary"
                  else f"MSE {r['mse']:.4f} RMSE {r['rmse']:.4f}")
        print(f"{r['algorithm']:>10} {r['model']:>10}: {metric}")


# ---------------------------------------------------------------- generation

def cmd_gen(args) -> None:
    kind = "planted_cliques" if args.model == "planted" else args.model
    spec = GeneratorSpec(
        kind=kind, rows=args.rows, cols=args.cols, n=args.n, p=args.p, k=args.k,
        cliques=args.cliques, clique_size=args.size, bridges=args.bridges, seed=args.seed,
    )
    g = generate(spec)
    header = config_header("gen", spec.as_dict())
    if args.out == "-":
        write_edge_list(g, sys.stdout, header)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            write_edge_list(g, fh, header)
        print(f"{kind}: {g.node_count} nodes, {g.edge_count} edges -> {args.out}")


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coopnet", description="Cooperativity of networks and their communities under an evolutionary Prisoner's Dilemma.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="write a synthetic network as an edge list")
    p.add_argument("--model", required=True, choices=[*KINDS, "planted"])
    p.add_argument("--rows", type=int, default=10)
    p.add_argument("--cols", type=int, default=10)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=float, default=0.05)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--cliques", type=int, default=2)
    p.add_argument("--size", type=int, default=5)
    p.add_argument("--bridges", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("simulate", help="run the evolutionary game and write a JSON report")
    _add_source(p)
    _add_game(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="network cooperativity versus temptation b")
    _add_source(p)
    _add_game(p, with_b=False)
    p.add_argument("--b-range", default="1.2:1.9:0.1", help="start:end:step (default 1.2:1.9:0.1)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("detect", help="detect communities and write a cover file")
    _add_source(p)
    p.add_argument("--algorithm", choices=ALGORITHMS, required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_detect_params(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("analyze", help="community records and Spearman correlations")
    _add_source(p, multiple=True)
    p.add_argument("--report", action="append", help="simulation report per network (repeatable)")
    p.add_argument("--cover", action="append", help="external cover file (repeatable)")
    p.add_argument("--algorithm", action="append", choices=ALGORITHMS,
                   help="built-in detector (repeatable; default walktrap when no cover given)")
    p.add_argument("--seed", type=int, default=0)
    _add_detect_params(p)
    p.add_argument("--no-filter", action="store_true", help="keep singleton and whole-network communities")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("predict", help="train and evaluate cooperativity models")
    p.add_argument("--features", required=True, help="feature CSV, e.g. communities.csv from analyze")
    p.add_argument("--model", action="append", choices=MODEL_KINDS, help="repeatable; default all")
    p.add_argument("--binarize", default="mean", help="mean | fixed=<tau> | label")
    p.add_argument("--split", type=float, default=0.8, help="training fraction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--dataset", help="dataset name for the report rows")
    p.add_argument("--pooled", action="store_true", help="ignore the algorithm column and pool all rows")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"coopnet: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, UndefinedMetricError, OSError) as exc:
        print(f"coopnet: error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        print(f"coopnet: internal error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
