"""Command-line entry point: ``streampart <subcommand> ...``.

Exit codes: 0 ok, 2 bad configuration, 3 bad input data, 4 internal
invariant violation. Failures print one line, ``error: <category>: <message>``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .completion import ROLE_TRAIN
from .errors import ConfigError, InputDataError, InvariantError
from .graph_stream import compute_degrees, open_edge_stream
from .pipeline import ALGORITHMS, bench, format_bench, partition_graph, report_for
from .spring import DEFAULT_BETA
from .store import FeatureMatrix, attach_features, plan_partition_count, read_partitions, write_partitions

EXIT_OK, EXIT_CONFIG, EXIT_INPUT, EXIT_INTERNAL = 0, 2, 3, 4

log = logging.getLogger("streampart")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [t for t in text.split(",") if t]


def _add_stream_args(sp, required=True):
    src = sp.add_mutually_exclusive_group(required=required)
    src.add_argument("--input", help="edge list (text TSV or EDG1 binary)")
    src.add_argument("--dataset", help="bundled dataset: cora, citeseer or pubmed")
    sp.add_argument("--input-format", default="auto", help="auto, text or binary")
    sp.add_argument("--directed", action="store_true",
                    help="input lists directed edges; add each reverse edge to the stream")


def _add_partition_args(sp):
    sp.add_argument("--algo", default="spring", choices=ALGORITHMS)
    sp.add_argument("--beta", type=float, default=DEFAULT_BETA)
    sp.add_argument("--tau-vol", type=int, default=None)
    sp.add_argument("--lambda", dest="lam", type=float, default=1.1, help="HDRF balance weight")
    sp.add_argument("--hops", type=int, default=1, choices=(1, 2, 3))
    sp.add_argument("--no-completion", action="store_true",
                    help="ablation: cross-partition edges go to one random endpoint home")
    sp.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streampart",
                                     description="Streaming graph partitioning for GNN training.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("partition", help="partition an edge stream and write an artifact")
    _add_stream_args(sp)
    _add_partition_args(sp)
    sp.add_argument("-p", "--partitions", type=int, required=True)
    sp.add_argument("--num-nodes", type=int, default=None,
                    help="ids are 0..N-1 (keeps isolated nodes); default: ids seen in the stream")
    sp.add_argument("--features", help="FEA1 feature file to split alongside")
    sp.add_argument("-o", "--output", default="partitions")
    sp.add_argument("--format", choices=("json", "table"), default="table")

    sp = sub.add_parser("stats", help="report on a partition artifact")
    sp.add_argument("artifact")
    sp.add_argument("--format", choices=("json", "table"), default="table")

    sp = sub.add_parser("split-features", help="split a feature file into an artifact")
    sp.add_argument("artifact")
    sp.add_argument("--features", required=True)

    sp = sub.add_parser("train-sim", help="simulate model-averaged training")
    _add_stream_args(sp, required=False)
    _add_partition_args(sp)
    sp.add_argument("-p", "--partitions", type=int, default=4)
    sp.add_argument("--artifact", help="use an existing artifact instead of partitioning")
    sp.add_argument("--features", help="FEA1 feature file (default: bundled Cora)")
    sp.add_argument("--labels", help=".npy integer labels (default: bundled Cora)")
    sp.add_argument("-q", "--workers", type=int, default=1)
    sp.add_argument("--sync-interval", type=int, default=1)
    sp.add_argument("--epochs", type=int, default=100)
    sp.add_argument("--lr", type=float, default=0.01)
    sp.add_argument("--batch-size", type=int, default=512)
    sp.add_argument("--weight-decay", type=float, default=0.0)
    sp.add_argument("--prop-steps", type=int, default=2)
    sp.add_argument("--centralized", action="store_true", help="also run the single-model reference")
    sp.add_argument("--history", default="history.csv")
    sp.add_argument("--metrics", default="metrics.json")

    sp = sub.add_parser("plan", help="partition count from worker memory")
    sp.add_argument("-q", "--workers", type=int, required=True)
    sp.add_argument("-M", "--memory", type=float, required=True, help="GB per worker")
    sp.add_argument("-T", "--reserved", type=float, default=None, help="GB reserved (default 2M/3)")
    sp.add_argument("--data-size", type=float, required=True, help="GB of graph plus features")

    sp = sub.add_parser("bench", help="replication factor for algorithms x partition counts")
    _add_stream_args(sp)
    sp.add_argument("-p", "--partitions", type=_int_list, default=[4, 8, 16])
    sp.add_argument("--algos", type=_str_list, default=list(ALGORITHMS))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--format", choices=("json", "table"), default="table")
    return parser


def _open_stream(args):
    """Return (stream, num_nodes or None, dataset or None)."""
    if getattr(args, "dataset", None):
        from .datasets import load_dataset

        ds = load_dataset(args.dataset)
        return ds.stream(add_reverse=args.directed), ds.num_nodes, ds
    if not args.input:
        raise ConfigError("give --input or --dataset")
    path = Path(args.input)
    if not path.is_file():
        raise InputDataError(f"no such input file: {path}")
    return open_edge_stream(path, args.input_format, add_reverse=args.directed), None, None


def _partition_params(args) -> dict:
    params = {"beta": args.beta, "tau_vol": args.tau_vol, "hops": args.hops,
              "completion": not args.no_completion}
    if args.algo == "hdrf":
        params["lambda"] = args.lam
    return params


def _partition(args, stream, degrees):
    kwargs = {}
    if args.algo in ("spring", "2ps"):
        kwargs["tau_vol"] = args.tau_vol
    if args.algo == "spring":
        kwargs["beta"] = args.beta
    if args.algo == "hdrf":
        kwargs["lam"] = args.lam
    return partition_graph(args.algo, stream, args.partitions, degrees=degrees, hops=args.hops,
                           completion=not args.no_completion, seed=args.seed, **kwargs)


def _run_config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("verbose", "format")}
    return json.loads(json.dumps(cfg))


def cmd_partition(args) -> int:
    stream, n, _ = _open_stream(args)
    degrees = compute_degrees(stream, num_nodes=args.num_nodes or n)
    g = _partition(args, stream, degrees)
    params = _partition_params(args)
    if g.info.get("tau_vol") is not None:
        params["tau_vol"] = g.info["tau_vol"]
    node_ids = None if degrees.contiguous else degrees.ids
    write_partitions(g, args.output, args.features, node_ids=node_ids, algorithm=args.algo,
                     params=dict(params, run=_run_config(args)), seed=args.seed)
    report = report_for(g, params)
    print(report.to_json() if args.format == "json" else report.to_table())
    return EXIT_OK


def cmd_stats(args) -> int:
    g = read_partitions(args.artifact)
    manifest = g.info["manifest"]
    report = report_for(g, manifest.get("params"))
    report.algorithm = manifest.get("algorithm", "")
    print(report.to_json() if args.format == "json" else report.to_table())
    return EXIT_OK


def cmd_split_features(args) -> int:
    manifest = attach_features(args.artifact, args.features)
    print(f"wrote features (d={manifest['feature_dim']}) for {manifest['p']} partitions")
    return EXIT_OK


def _training_inputs(args):
    """Features and labels, either from files or the bundled Cora set."""
    if args.features and args.labels:
        fm = FeatureMatrix(args.features)
        return fm.read_all().astype(np.float64), np.load(args.labels)
    if args.features or args.labels:
        raise ConfigError("--features and --labels go together")
    from .datasets import load_dataset

    ds = load_dataset("cora")
    return ds.features, ds.labels


def cmd_train_sim(args) -> int:
    from .training import TrainConfig, centralized_train, distributed_train, split_roles

    features, labels = _training_inputs(args)
    if args.artifact:
        g = read_partitions(args.artifact)
    else:
        if not args.input and not args.dataset:
            args.dataset = "cora"
        stream, n, _ = _open_stream(args)
        degrees = compute_degrees(stream, num_nodes=n or len(labels))
        g = _partition(args, stream, degrees)
    if g.num_nodes != len(labels) or len(features) != len(labels):
        raise InputDataError(f"graph has {g.num_nodes} nodes, features {len(features)}, "
                             f"labels {len(labels)}")
    roles = split_roles(g.num_nodes, seed=args.seed)
    config = TrainConfig(epochs=args.epochs, lr=args.lr, batch_size=args.batch_size,
                         weight_decay=args.weight_decay, prop_steps=args.prop_steps, seed=args.seed)
    result = distributed_train(g, features, labels, roles, q=args.workers,
                               sync_interval=args.sync_interval, config=config)
    with open(args.history, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["epoch", "sync_count", "val_f1", "test_f1"])
        writer.writeheader()
        writer.writerows(result.history)
    metrics = {"p": g.p, "q": args.workers, "sync_interval": args.sync_interval,
               "num_syncs": result.num_syncs, "val_f1": result.val_f1, "test_f1": result.test_f1,
               "train_nodes": int(np.sum(roles == ROLE_TRAIN))}
    if args.centralized:
        ref = centralized_train(_global_edges(g), features, labels, roles, config=config)
        metrics["centralized_val_f1"] = ref.val_f1
        metrics["centralized_test_f1"] = ref.test_f1
    Path(args.metrics).write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    print(json.dumps(metrics, sort_keys=True))
    return EXIT_OK


def _global_edges(g) -> np.ndarray:
    """Every streamed edge once, recovered from the partitions by stream position."""
    ids = np.concatenate([part.edge_ids for part in g])
    edges = np.concatenate([part.edges for part in g])
    _, first = np.unique(ids, return_index=True)
    return edges[first]


def cmd_plan(args) -> int:
    print(plan_partition_count(args.workers, args.memory, args.reserved, data_size=args.data_size))
    return EXIT_OK


def cmd_bench(args) -> int:
    unknown = sorted(set(args.algos) - set(ALGORITHMS))
    if unknown:
        raise ConfigError(f"unknown algorithms: {', '.join(unknown)}")
    stream, n, _ = _open_stream(args)
    degrees = compute_degrees(stream, num_nodes=n)
    table = bench(stream, args.algos, args.partitions, seed=args.seed, degrees=degrees)
    if args.format == "json":
        print(json.dumps({a: {str(p): float(rf) for p, rf in row.items()} for a, row in table.items()},
                         indent=2))
    else:
        print(format_bench(table))
    return EXIT_OK


COMMANDS = {
    "partition": cmd_partition,
    "stats": cmd_stats,
    "split-features": cmd_split_features,
    "train-sim": cmd_train_sim,
    "plan": cmd_plan,
    "bench": cmd_bench,
}


def _fail(category: str, exc: BaseException, code: int) -> int:
    msg = " ".join(str(exc).split()) or type(exc).__name__
    print(f"error: {category}: {msg}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except (InputDataError, OSError) as exc:
        return _fail("input", exc, EXIT_INPUT)
    except InvariantError as exc:
        return _fail("invariant", exc, EXIT_INTERNAL)
    except Exception as exc:  # noqa: BLE001
        return _fail("internal", exc, EXIT_INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
