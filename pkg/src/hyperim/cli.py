"""Command-line pipeline: sample models, generate cascades, train, select,
evaluate, export stats. Every random quantity derives from one --seed via
named substreams, so a full pipeline rerun is byte-identical.

Exit status 0 on success; on failure a single machine-parsable line
"ERROR: <message>" goes to stderr and the status is 2.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import diffusion, embedding, selection
from . import rng as _rng
from .graph import SocialGraph, load_edge_list, write_label_map


def _default_beta(node_count: int) -> float:
    if node_count < 5_000:
        return 1.0
    if node_count < 100_000:
        return 0.5
    return 0.1


def _write_with_labels(g: SocialGraph, path: Path, writer) -> None:
    writer(path)
    write_label_map(g, str(path) + ".labels")


def _load_graph(path: str) -> SocialGraph:
    return load_edge_list(path)


def _sample_model(g: SocialGraph, kind: str, seed: int):
    if kind == "ic":
        return diffusion.sample_ic_instance(g, _rng.derive_seed(seed, "model-sampling"))
    if kind == "wlt":
        return diffusion.sample_wlt_instance(g, _rng.derive_seed(seed, "model-sampling"))
    raise ValueError(f"unknown model kind {kind!r} (expected ic or wlt)")


def cmd_sample_model(args) -> int:
    g = _load_graph(args.graph)
    if g.dropped_self_loops:
        print(f"note: dropped {g.dropped_self_loops} self-loop(s) on load")
    model = _sample_model(g, args.kind, args.seed)
    out = Path(args.out)
    _write_with_labels(g, out, lambda p: diffusion.save_model_instance(model, p))
    print(f"wrote {out} ({args.kind}, {g.node_count} nodes, {g.edge_count} edges)")
    return 0


def cmd_generate(args) -> int:
    model = diffusion.load_model_instance(args.model)
    instances = diffusion.generate_instances(
        model, None, args.seed_ratio, args.instances,
        _rng.derive_seed(args.seed, "generate"), workers=args.threads)
    diffusion.save_propagation_instances(instances, args.out)
    sizes = [len(inst.activated) for inst in instances]
    print(f"wrote {args.out} ({len(instances)} instances, "
          f"mean activated {np.mean(sizes):.1f} of {model.node_count})")
    return 0


def _train_config(args) -> embedding.TrainConfig:
    return embedding.TrainConfig(
        dim=args.dim, gamma=args.gamma, negatives=args.negatives,
        epochs=args.epochs, learning_rate=args.learning_rate,
        batch_size=args.batch_size, optimizer=args.optimizer,
        rng_seed=_rng.derive_seed(args.seed, "training"),
        reg_sign=-1.0 if not args.literal_reg_sign else 1.0)


def cmd_train(args) -> int:
    g = _load_graph(args.graph)
    if args.instances_file and Path(args.instances_file).exists():
        instances = diffusion.load_propagation_instances(args.instances_file)
    else:
        if args.instances_file:
            print(f"warning: {args.instances_file} not found; "
                  "training on structure only", file=sys.stderr)
        else:
            print("warning: no instances file given; training on structure only",
                  file=sys.stderr)
        instances = []
    table = embedding.train(g, instances, _train_config(args))
    out = Path(args.out)
    _write_with_labels(g, out, lambda p: embedding.save_embedding(table, p))
    print(f"wrote {out} (n={table.dim}, gamma={table.gamma}, "
          f"final loss/positive {table.loss_history[-1]:.4f})")
    return 0


def _resolve_k(args, node_count: int) -> int:
    if args.k is not None and args.ratio is not None:
        raise ValueError("give either --k or --ratio, not both")
    if args.k is not None:
        return args.k
    if args.ratio is not None:
        return int(np.ceil(args.ratio * node_count))
    raise ValueError("one of --k or --ratio is required")


def cmd_select(args) -> int:
    g = _load_graph(args.graph)
    k = _resolve_k(args, g.node_count)
    if args.method in ("him", "him_md"):
        if not args.embedding:
            raise ValueError(f"--embedding is required for method {args.method}")
        table = embedding.load_embedding(args.embedding)
        if table.node_count != g.node_count:
            raise ValueError("embedding / graph node count mismatch")
    if args.method == "him":
        beta = args.beta if args.beta is not None else _default_beta(g.node_count)
        result = selection.select_asw(g, table, k, beta)
    elif args.method == "him_md":
        if args.beta is not None:
            print("note: --beta is ignored by him_md", file=sys.stderr)
        result = selection.select_him_md(table, k)
    elif args.method == "degree":
        result = selection.select_degree_topk(g, k)
    elif args.method == "random":
        result = selection.select_random(g, k, _rng.derive_seed(args.seed, "selection"))
    else:
        raise ValueError(f"unknown method {args.method!r}")
    out = Path(args.out)
    _write_with_labels(g, out, lambda p: selection.save_seed_set(result, p))
    print(f"wrote {out} (method={result.method}, k={k})")
    return 0


def cmd_evaluate(args) -> int:
    model = diffusion.load_model_instance(args.model)
    seeds = selection.load_seed_set(args.seeds).seeds
    started = time.perf_counter()
    est = diffusion.estimate_spread(model, seeds, args.rounds,
                                    _rng.derive_seed(args.seed, "evaluation"),
                                    workers=args.threads)
    elapsed = time.perf_counter() - started
    print(f"spread_ratio_pct={100.0 * est.mean_ratio:.4f} "
          f"std_pct={100.0 * est.std_ratio:.4f} rounds={est.rounds} "
          f"runtime_s={elapsed:.3f}")
    return 0


def cmd_export_stats(args) -> int:
    g = _load_graph(args.graph)
    table = embedding.load_embedding(args.embedding)
    model = diffusion.load_model_instance(args.model)
    if args.sample > g.node_count:
        raise ValueError("sample size exceeds node count")
    gen = _rng.generator(args.seed, "stats-sample")
    nodes = sorted(int(u) for u in gen.choice(g.node_count, size=args.sample,
                                              replace=False))
    scores = table.ldo_all()
    out = Path(args.out)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("node,degree,ldo,est_spread_ratio\n")
        for u in nodes:
            est = diffusion.estimate_spread(
                model, [u], args.rounds, _rng.derive_seed(args.seed, "stats-mc", u))
            fh.write(f"{g.label_of(u)},{g.degree(u)},{float(scores[u])!r},"
                     f"{est.mean_ratio!r}\n")
    write_label_map(g, str(out) + ".labels")
    print(f"wrote {out} ({args.sample} rows)")
    return 0


def cmd_pipeline(args) -> int:
    g = _load_graph(args.graph)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    model = _sample_model(g, args.kind, args.seed)
    model_path = outdir / f"model_{args.kind}.txt"
    _write_with_labels(g, model_path, lambda p: diffusion.save_model_instance(model, p))

    ratios = [float(r) for r in args.ratios.split(",")]
    methods = args.methods.split(",")
    rows = []
    for ratio in ratios:
        tag = f"{ratio:g}".replace(".", "p")
        instances = diffusion.generate_instances(
            model, g, ratio, args.instances,
            _rng.derive_seed(args.seed, "generate", tag))
        inst_path = outdir / f"instances_{args.kind}_r{tag}.txt"
        diffusion.save_propagation_instances(instances, inst_path)
        config = _train_config(args)
        config.rng_seed = _rng.derive_seed(args.seed, "training", tag)
        table = embedding.train(g, instances, config)
        emb_path = outdir / f"embedding_{args.kind}_r{tag}.txt"
        embedding.save_embedding(table, emb_path)
        k = int(np.ceil(ratio * g.node_count))
        for method in methods:
            if method == "him":
                beta = args.beta if args.beta is not None else _default_beta(g.node_count)
                result = selection.select_asw(g, table, k, beta)
            elif method == "him_md":
                result = selection.select_him_md(table, k)
            elif method == "degree":
                result = selection.select_degree_topk(g, k)
            elif method == "random":
                result = selection.select_random(
                    g, k, _rng.derive_seed(args.seed, "selection", tag))
            else:
                raise ValueError(f"unknown method {method!r}")
            seed_path = outdir / f"seeds_{method}_{args.kind}_r{tag}.txt"
            selection.save_seed_set(result, seed_path)
            est = diffusion.estimate_spread(
                model, result.seeds, args.rounds,
                _rng.derive_seed(args.seed, "evaluation", tag, method),
                workers=args.threads)
            rows.append((method, ratio, 100.0 * est.mean_ratio, 100.0 * est.std_ratio))

    table_path = outdir / f"results_{args.kind}.csv"
    with open(table_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("method,ratio,spread_pct,std_pct\n")
        for method, ratio, mean, std in rows:
            fh.write(f"{method},{ratio:g},{mean:.4f},{std:.4f}\n")
    write_label_map(g, str(table_path) + ".labels")

    print(f"{'method':<10} {'ratio':>6} {'spread%':>9} {'std%':>7}")
    for method, ratio, mean, std in rows:
        print(f"{method:<10} {ratio:>6g} {mean:>9.2f} {std:>7.2f}")
    print(f"artifacts in {outdir}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperim",
        description="Influence maximization via hyperbolic node embeddings")
    parser.add_argument("--seed", type=int, default=0,
                        help="master seed; every stage derives from it")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker processes for evaluation rounds")
    parser.add_argument("--deterministic", action=argparse.BooleanOptionalAction,
                        default=True,
                        help="kept for interface compatibility; results are "
                             "deterministic for any worker count")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample-model", help="draw and freeze diffusion parameters")
    p.add_argument("--graph", required=True)
    p.add_argument("--kind", choices=("ic", "wlt"), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample_model)

    p = sub.add_parser("generate", help="simulate propagation instances")
    p.add_argument("--model", required=True)
    p.add_argument("--seed-ratio", type=float, required=True)
    p.add_argument("--instances", "-M", type=int, default=30)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    def add_train_flags(p):
        p.add_argument("--dim", type=int, default=64)
        p.add_argument("--gamma", type=float, default=1.0)
        p.add_argument("--negatives", type=int, default=5)
        p.add_argument("--epochs", type=int, default=100)
        p.add_argument("--optimizer", choices=("sgd", "adam"), default="sgd")
        p.add_argument("--learning-rate", type=float, default=None,
                       help="defaults to 0.5 for sgd, 1e-3 for adam")
        p.add_argument("--batch-size", type=int, default=1024)
        p.add_argument("--literal-reg-sign", action="store_true",
                       help="use the push-away regularizer sign instead of "
                            "the default origin-pull")

    p = sub.add_parser("train", help="fit node embeddings")
    p.add_argument("--graph", required=True)
    p.add_argument("--instances-file")
    p.add_argument("--out", required=True)
    add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("select", help="pick a seed set")
    p.add_argument("--graph", required=True)
    p.add_argument("--embedding", help="required for him / him_md")
    p.add_argument("--method", choices=("him", "him_md", "degree", "random"),
                   required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--ratio", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="estimate spread of a seed set")
    p.add_argument("--model", required=True)
    p.add_argument("--seeds", required=True)
    p.add_argument("--rounds", type=int, default=100)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export-stats", help="per-node degree/ldo/spread CSV")
    p.add_argument("--graph", required=True)
    p.add_argument("--embedding", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--sample", type=int, default=100)
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_stats)

    p = sub.add_parser("pipeline", help="end-to-end benchmark table")
    p.add_argument("--graph", required=True)
    p.add_argument("--kind", choices=("ic", "wlt"), required=True)
    p.add_argument("--ratios", default="0.01,0.05,0.1")
    p.add_argument("--methods", default="him,him_md,degree,random")
    p.add_argument("--instances", "-M", type=int, default=30)
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--beta", type=float)
    p.add_argument("--out-dir", required=True)
    add_train_flags(p)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not args.deterministic:
        print("note: --no-deterministic has no effect; all paths are "
              "deterministic per worker-count-independent substreams",
              file=sys.stderr)
    try:
        return args.func(args)
    except BrokenPipeError:
        raise
    except Exception as exc:  # noqa: BLE001 - single CLI failure surface
        print(f"ERROR: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
