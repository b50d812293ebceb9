"""Command-line surface.

Subcommands: rewire (full pipeline), homophily (metrics only), reference
(build and export the reference graph), validate (oracle suites on
synthetic cases), synth (generate a block-model bundle), sweep
(perturbation-rate x budget curves).

Exit codes: 0 success, 2 usage error, 3 data error, 4 pipeline
degradation (some cluster passed through) unless --allow-degraded.
The REFINE_THREADS environment variable caps the worker count; results do
not depend on it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import DEFAULT_EPSILON_GRID, DEFAULT_K_FRACTIONS, RunConfig
from .dataio import (
    emit_report,
    fraction_payload,
    load_dataset,
    write_dataset_bundle,
    write_edges_tsv,
)
from .errors import EmptyGraph, NoLabeledEdges, RefineError
from .graph import EdgeSet, LabeledGraph, edge_homophily
from .kernels import KernelConfig, dump_kernel
from .partition import RefineRun, run_refine
from .reference import (
    ReferenceGraph,
    build_sampled_pair,
    check_addition_condition,
    check_deletion_condition,
    reference_from_data,
    select_epsilon,
)
from .seeding import splitmix64
from .synth import (
    PerturbedReferenceSpec,
    SbmSpec,
    generate_sbm,
    homophily_curve,
    ideal_reference,
    perturb_reference,
    run_proposition_validation,
    run_theorem_validation,
    write_curve_csv,
)

_SWEEP_SALT = 0x53EE9


def _worker_count() -> int:
    cap = os.environ.get("REFINE_THREADS")
    workers = os.cpu_count() or 1
    if cap:
        workers = max(1, min(workers, int(cap)))
    return workers


def _parse_k(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def _parse_epsilon(text: str):
    if text in ("grid", "auto"):
        return DEFAULT_EPSILON_GRID
    if "," in text:
        return tuple(float(tok) for tok in text.split(","))
    return float(text)


def _homophily_payload(g: LabeledGraph):
    try:
        rep = edge_homophily(g)
    except (EmptyGraph, NoLabeledEdges):
        return None
    payload = fraction_payload(rep.homophily)
    payload.update(
        edge_count=rep.edge_count,
        same_label_edges=rep.same_label_edges,
        unknown_label_edges=rep.unknown_label_edges,
    )
    return payload


def _condition_payload(cond):
    if cond is None:
        return None
    return {
        "direction": cond.direction,
        "holds": cond.holds,
        "margin": fraction_payload(cond.margin),
        "graph_homophily": fraction_payload(cond.graph_homophily),
        "pool_homophily": fraction_payload(cond.pool_homophily),
        "pool_size": cond.pool_size,
        "estimator": cond.estimator,
        "reason": cond.reason,
        "surrogate_homophily": fraction_payload(cond.surrogate_homophily),
        "surrogate_applicable": cond.surrogate_applicable,
        "ref_to_graph_ratio": fraction_payload(cond.ref_to_graph_ratio),
    }


def _cluster_payload(outcome, within_edge_count: int):
    rewired = outcome.rewired
    return {
        "id": outcome.cluster_id,
        "size": len(outcome.nodes),
        "edges_before": within_edge_count,
        "edges_after": len(rewired.graph.edges) if rewired else within_edge_count,
        "reference_edges": len(outcome.reference.edges) if outcome.reference else None,
        "k": rewired.plan.k if rewired else None,
        "pool_size": len(rewired.plan.candidate_pool) if rewired else None,
        "applied_edges": len(rewired.applied) if rewired else None,
        "realized_homophily": fraction_payload(
            outcome.report.homophily if outcome.report else None
        ),
        "expected_homophily": fraction_payload(outcome.expected_homophily),
        "condition": _condition_payload(outcome.condition),
        "status": outcome.status,
        "reason": outcome.reason,
    }


def build_run_report(run: RefineRun, cfg: RunConfig, load_report=None) -> dict:
    direction_cond = run.conditions.get(cfg.direction)
    within_counts = [0] * run.partition.num_clusters
    assignment = run.partition.assignment
    for u, v in run.input_graph.edges.pairs:
        cu = assignment[u]
        if cu == assignment[v]:
            within_counts[cu] += 1
    report = {
        "config": cfg.echo(),
        "epsilon_used": run.epsilon,
        "seed": cfg.seed,
        "input": {
            "nodes": run.input_graph.n,
            "edges": len(run.input_graph.edges),
            "homophily": _homophily_payload(run.input_graph),
            "homophily_estimate": fraction_payload(
                direction_cond.graph_homophily if direction_cond else None
            ),
        },
        "reference": {
            "edges": len(run.reference_union.edges) if run.reference_union else 0,
            "homophily_estimate": fraction_payload(
                direction_cond.surrogate_homophily if direction_cond else None
            ),
        },
        "conditions": {
            name: _condition_payload(cond) for name, cond in sorted(run.conditions.items())
        },
        "clusters": [
            _cluster_payload(outcome, count)
            for outcome, count in zip(run.clusters, within_counts)
        ],
        "output": {
            "edges": len(run.rewired_graph.edges),
            "homophily": _homophily_payload(run.rewired_graph),
        },
        "degraded": run.degraded,
    }
    if load_report is not None:
        report["load"] = {
            "self_loops_dropped": load_report.self_loops_dropped,
            "duplicates_merged": load_report.duplicates_merged,
        }
    return report


def _print(args, payload: dict, lines: list[str]) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in lines:
            print(line)


def cmd_rewire(args) -> int:
    loaded = load_dataset(args.input)
    cfg = RunConfig(
        epsilon=_parse_epsilon(args.epsilon),
        kernel=args.kernel,
        direction=args.direction,
        k=_parse_k(args.k),
        cluster_size=None if args.cluster_size == "auto" else int(args.cluster_size),
        seed=args.seed,
        metric=args.metric,
        clip_mode=args.clip,
        condition_mode=args.mode,
    )
    run = run_refine(loaded.graph, cfg, threads=_worker_count())
    report = build_run_report(run, cfg, loaded.report)
    out_dir = Path(args.output or args.input)
    emit_report(out_dir, report, run.rewired_graph.edges)
    summary = [
        f"rewired {loaded.graph.n} nodes: {len(loaded.graph.edges)} -> "
        f"{len(run.rewired_graph.edges)} edges ({cfg.direction}, epsilon={run.epsilon})",
        f"clusters: {run.partition.num_clusters}, degraded: {run.degraded}",
        f"wrote {out_dir / 'report.json'} and {out_dir / 'rewired_edges.tsv'}",
    ]
    _print(args, report, summary)
    if run.degraded and not args.allow_degraded:
        return 4
    return 0


def cmd_homophily(args) -> int:
    loaded = load_dataset(args.input)
    g = loaded.graph
    payload = {
        "nodes": g.n,
        "edges": len(g.edges),
        "homophily": _homophily_payload(g),
        "load": {
            "self_loops_dropped": loaded.report.self_loops_dropped,
            "duplicates_merged": loaded.report.duplicates_merged,
        },
    }
    sampled = None
    if g.nodes_with_split("val") and g.nodes_with_split("train"):
        empty_ref = ReferenceGraph(EdgeSet(g.n, frozenset()), "synthetic")
        pair = build_sampled_pair(g, empty_ref, args.seed)
        try:
            sampled = edge_homophily(pair.sampled_original).homophily
        except (EmptyGraph, NoLabeledEdges):
            sampled = None
    payload["sampled_homophily"] = fraction_payload(sampled)
    h = payload["homophily"]
    lines = [f"nodes: {g.n}, edges: {len(g.edges)}"]
    if h:
        lines.append(f"homophily: {h['fraction']} = {h['float']:.6f}")
    else:
        lines.append("homophily: undefined (no fully labeled edge)")
    if sampled is not None:
        lines.append(f"sampled estimate: {float(sampled):.6f}")
    _print(args, payload, lines)
    return 0


def cmd_reference(args) -> int:
    loaded = load_dataset(args.input)
    g = loaded.graph
    if g.features is None:
        raise RefineError("reference construction requires features.tsv")
    if g.n > 2000:
        print(
            f"warning: dense kernel on {g.n} nodes; consider the clustered pipeline",
            file=sys.stderr,
        )
    train_map = {
        i: g.labels[i] for i, tag in enumerate(g.split) if tag == "train"
    }
    epsilon = _parse_epsilon(args.epsilon)
    if not isinstance(epsilon, float):
        epsilon = select_epsilon(
            g.features, list(g.labels), list(g.split), epsilon,
            kind=args.kernel, metric=args.metric, clip_mode=args.clip, seed=args.seed,
        )
    ref, gamma = reference_from_data(
        g.features, train_map, KernelConfig(epsilon, args.metric),
        kind=args.kernel, clip_mode=args.clip,
    )
    out_dir = Path(args.output or args.input)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_edges_tsv(out_dir / "reference_edges.tsv", ref.edges)
    if args.dump_kernel:
        dump_kernel(gamma, out_dir / "kernel.bin", out_dir / "kernel.meta", epsilon)
    mode = args.mode
    check = check_addition_condition if args.direction == "add" else check_deletion_condition
    cond = check(g, ref, mode=mode, seed=splitmix64(args.seed))
    payload = {
        "epsilon_used": epsilon,
        "kernel": args.kernel,
        "reference_edges": len(ref.edges),
        "graph_edges": len(g.edges),
        "condition": _condition_payload(cond),
    }
    lines = [
        f"reference edges: {len(ref.edges)} (graph has {len(g.edges)}), epsilon={epsilon}",
        f"{args.direction} condition holds: {cond.holds} ({cond.reason or 'decided'})",
        f"wrote {out_dir / 'reference_edges.tsv'}",
    ]
    _print(args, payload, lines)
    return 0


def cmd_validate(args) -> int:
    run_props = args.propositions or not args.theorem
    run_theo = args.theorem or not args.propositions
    payload: dict = {}
    ok = True
    lines: list[str] = []
    if run_props:
        summary = run_proposition_validation(
            n_max=args.n_max, cases=args.cases, seed=args.seed
        )
        payload["propositions"] = {
            "cases": summary.cases,
            "failures": list(summary.failures),
        }
        lines.append(
            f"expectation oracle: {summary.cases} cases, "
            f"{len(summary.failures)} failures"
        )
        ok = ok and summary.ok
    if run_theo:
        summary = run_theorem_validation(
            trials=args.trials, n_max=min(args.n_max + 2, 10), seed=args.seed
        )
        payload["bound"] = {
            "trials": summary.cases,
            "failures": list(summary.failures),
        }
        lines.append(
            f"smoothness bound: {summary.cases} trials, {len(summary.failures)} failures"
        )
        ok = ok and summary.ok
    _print(args, payload, lines)
    return 0 if ok else 1


def cmd_synth(args) -> int:
    sizes = tuple(int(tok) for tok in args.classes.split(","))
    fracs = tuple(float(tok) for tok in args.split.split(","))
    if len(fracs) != 3:
        raise ValueError("--split needs three comma-separated fractions")
    spec = SbmSpec(
        class_sizes=sizes,
        intra_p=args.intra_p,
        inter_p=args.inter_p,
        seed=args.seed,
        feature_dim=args.dim,
        feature_scale=args.scale,
        split_fracs=fracs,  # type: ignore[arg-type]
    )
    g = generate_sbm(spec)
    write_dataset_bundle(args.output, g)
    payload = {
        "nodes": g.n,
        "edges": len(g.edges),
        "classes": list(sizes),
        "homophily": _homophily_payload(g),
        "output": str(args.output),
    }
    h = payload["homophily"]
    _print(
        args,
        payload,
        [
            f"wrote bundle to {args.output}: {g.n} nodes, {len(g.edges)} edges"
            + (f", homophily {h['float']:.4f}" if h else ""),
        ],
    )
    return 0


def _sweep_grid(text: str, pool_size: int) -> list[int]:
    if text == "auto":
        ks = {0}
        ks.update(max(1, round(f * pool_size)) for f in DEFAULT_K_FRACTIONS)
        return sorted(ks)
    out = set()
    for tok in text.split(","):
        value = _parse_k(tok)
        if isinstance(value, float):
            out.add(max(1, round(value * pool_size)))
        else:
            out.add(value)
    return sorted(out)


def cmd_sweep(args) -> int:
    loaded = load_dataset(args.input)
    g = loaded.graph
    if any(l is None for l in g.labels):
        raise RefineError("sweep requires a fully labeled dataset (synthetic mode)")
    out_dir = Path(args.output or args.input)
    out_dir.mkdir(parents=True, exist_ok=True)
    p_values = [float(tok) for tok in args.p.split(",")]
    ideal = ideal_reference(list(g.labels))
    payload = {"sweeps": []}
    lines = []
    for idx, p in enumerate(p_values):
        spec = PerturbedReferenceSpec(
            p=p, seed=splitmix64(args.seed ^ (_SWEEP_SALT + idx))
        )
        ref = perturb_reference(ideal, list(g.labels), spec)
        if args.direction == "add":
            pool_size = len(ref.edges.residual(g.edges))
        else:
            pool_size = len(g.edges.residual(ref.edges))
        if pool_size == 0:
            lines.append(f"p={p}: empty candidate pool, skipped")
            continue
        grid = _sweep_grid(args.k_grid, pool_size)
        if args.direction == "delete":
            grid = [k for k in grid if k < len(g.edges)]
        curve = homophily_curve(
            g, ref, args.direction, grid, args.trials,
            seed=splitmix64(args.seed ^ idx),
        )
        path = out_dir / f"sweep_{args.direction}_p{p}.csv"
        write_curve_csv(curve, path)
        ref_h = float(ref.estimated_homophily) if ref.estimated_homophily is not None else None
        payload["sweeps"].append(
            {
                "p": p,
                "reference_homophily": ref_h,
                "csv": str(path),
                "points": [
                    {
                        "k": pt.k,
                        "mean_H": float(pt.mean_h),
                        "expected_H": float(pt.expected_h),
                        "std_H": pt.std_h,
                        "trials": pt.trials,
                    }
                    for pt in curve
                ],
            }
        )
        lines.append(f"p={p}: reference homophily {ref_h}, wrote {path}")
    _print(args, payload, lines)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="refine",
        description="Homophily-enhancing graph rewiring guided by a reference graph.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("rewire", help="run the full clustered rewiring pipeline")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None, help="output directory (default: input)")
    p.add_argument("--direction", choices=("add", "delete"), default="add")
    p.add_argument("--k", default="0.5", help="edge budget per cluster: int or fraction")
    p.add_argument("--epsilon", default="grid", help="float, comma grid, or 'grid'")
    p.add_argument("--kernel", choices=("pdp", "d_only"), default="pdp")
    p.add_argument("--cluster-size", default="auto")
    p.add_argument("--metric", choices=("euclidean", "cosine_distance"), default="euclidean")
    p.add_argument("--clip", choices=("or", "and"), default="or")
    p.add_argument("--mode", choices=("sampled", "exact"), default="sampled")
    p.add_argument("--allow-degraded", action="store_true")
    common(p)
    p.set_defaults(func=cmd_rewire)

    p = sub.add_parser("homophily", help="edge homophily of a dataset")
    p.add_argument("--input", required=True)
    common(p)
    p.set_defaults(func=cmd_homophily)

    p = sub.add_parser("reference", help="build and export the reference graph")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None)
    p.add_argument("--epsilon", default="grid")
    p.add_argument("--kernel", choices=("pdp", "d_only"), default="pdp")
    p.add_argument("--metric", choices=("euclidean", "cosine_distance"), default="euclidean")
    p.add_argument("--clip", choices=("or", "and"), default="or")
    p.add_argument("--direction", choices=("add", "delete"), default="add")
    p.add_argument("--mode", choices=("sampled", "exact"), default="sampled")
    p.add_argument("--dump-kernel", action="store_true")
    common(p)
    p.set_defaults(func=cmd_reference)

    p = sub.add_parser("validate", help="oracle suites for the closed-form guarantees")
    p.add_argument("--propositions", action="store_true")
    p.add_argument("--theorem", action="store_true")
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--cases", type=int, default=200)
    p.add_argument("--trials", type=int, default=1000)
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("synth", help="generate a block-model dataset bundle")
    p.add_argument("--output", required=True)
    p.add_argument("--classes", default="40,40,40,40")
    p.add_argument("--intra-p", type=float, default=0.05)
    p.add_argument("--inter-p", type=float, default=0.05)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--split", default="0.6,0.2,0.2")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sweep", help="perturbation-rate x budget homophily curves")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None)
    p.add_argument("--p", default="0.1,0.3,0.6")
    p.add_argument("--direction", choices=("add", "delete"), default="add")
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--k-grid", default="auto")
    common(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (RefineError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
