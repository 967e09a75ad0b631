"""Command line: ``run``, ``scaling`` and ``graph-info``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .graph import GraphClass, classify, greedy_clique_partition, greedy_independent_set, greedy_weak_dominating_set, load_graph
from .harness import ExperimentConfig, parse_param_value, run_experiment, scaling_suite
from .policies import REGISTRY


def _seeds(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def _param(text: str) -> tuple[str, object]:
    key, eq, val = text.partition("=")
    if not eq or not key:
        raise argparse.ArgumentTypeError(f"--param expects key=value, got {text!r}")
    try:
        return key.strip(), parse_param_value(val)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _grid(text: str) -> tuple[str, list[str]]:
    key, eq, vals = text.partition("=")
    values = [v.strip() for v in vals.split(",") if v.strip()]
    if not eq or not key or len(values) < 2:
        raise argparse.ArgumentTypeError("--grid expects KEY=v1,v2[,...] with at least two values")
    return key.strip(), values


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True, type=Path, help="feedback graph file")
    p.add_argument("--algo", required=True, choices=sorted(REGISTRY))
    p.add_argument("--T", required=True, type=int, help="horizon")
    p.add_argument("--seeds", default=(0,), type=_seeds, help="comma-separated seeds")
    p.add_argument("--env", required=True,
                   help="environment: file:PATH, smallloss:mu_star=..,gap=..,best_arm=.., uniform, "
                        "shifted:switch_round=.., lowerbound:variant=A|B,b=..")
    p.add_argument("--param", action="append", default=[], type=_param, metavar="KEY=VALUE",
                   help="policy parameter (repeatable); L_star/L_oracle accept 'auto'")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--trace", choices=("summary", "per-round"), default="summary")
    p.add_argument("--workers", type=int, default=1, help="parallel trials (processes)")


def _config(args) -> ExperimentConfig:
    return ExperimentConfig.from_paths(
        args.graph, algo=args.algo, T=args.T, env=args.env, seeds=args.seeds,
        params=dict(args.param), out=args.out, trace=args.trace,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphbandit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one configuration over a list of seeds")
    _add_run_args(run)
    sc = sub.add_parser("scaling", help="repeat a configuration over a grid of T or an environment parameter")
    _add_run_args(sc)
    sc.add_argument("--grid", required=True, type=_grid, metavar="KEY=v1,v2,...")
    gi = sub.add_parser("graph-info", help="print observability class and greedy graph statistics")
    gi.add_argument("--graph", required=True, type=Path)
    return parser


def _graph_info(path) -> str:
    g = load_graph(path)
    r = classify(g)
    part = greedy_clique_partition(g)
    lines = [
        f"K: {g.num_arms}",
        f"class: {r.graph_class.value}",
        f"self_aware: {r.is_self_aware}",
        f"directed_complete_bipartite: {r.is_directed_complete_bipartite}",
        f"self_loop_set: {list(g.self_loop_set)}",
        f"weak_nodes: {list(r.weak_nodes)}",
        "node_classes: " + " ".join(f"{i}:{c.value}" for i, c in enumerate(r.per_node_class)),
        f"kappa: {part.kappa}",
        f"cliques: {[list(c) for c in part.cliques]}",
        f"alpha: {len(greedy_independent_set(g))}",
    ]
    if r.graph_class is GraphClass.UNOBSERVABLE:
        lines.append("d: n/a")
    else:
        ds = greedy_weak_dominating_set(g)
        lines.append(f"d: {ds.d}")
        lines.append(f"dominating_set: {list(ds.members)}")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "graph-info":
            print(_graph_info(args.graph))
            return 0
        cfg = _config(args)
        if args.command == "run":
            rep = run_experiment(cfg, workers=args.workers)
            for row in rep.rows:
                print(f"seed={row.seed} learner_loss={row.learner_loss:.6g} L_star={row.L_star:.6g} "
                      f"regret={row.regret:.6g} epochs={row.epochs_used}")
            print(f"mean_regret={rep.mean_regret:.6g} std_regret={rep.std_regret:.6g}")
            print(f"wrote {Path(cfg.out) / 'summary.csv'}")
            return 0
        key, values = args.grid
        rows, _ = scaling_suite(cfg, key, values, workers=args.workers)
        print("grid,mean_L_star,mean_regret,slope")
        for r in rows:
            slope = "" if r.slope is None else f"{r.slope:.4f}"
            print(f"{r.grid:g},{r.mean_L_star:.6g},{r.mean_regret:.6g},{slope}")
        print(f"wrote {Path(cfg.out) / 'scaling.csv'}")
        return 0
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
