"""Command-line entry point.

Subcommands mirror the pipeline stages so each is independently scriptable:
simulate writes a synthetic dataset, embed-linear turns covariates plus a
relationship network into embeddings, learn runs the full structure-learning
procedure, tune reports the per-node cross-validation detail, evaluate
scores an estimate against a ground truth, and benchmark sweeps simulated
configurations for both methods.

A --config file holds flat key/value JSON; any flag given on the command
line overrides the file. Every learn/tune/embed run can write a manifest
recording the resolved configuration, input digests, and library versions.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io
from .embedding import fit_embedding_from_covariates
from .model import DagStructure, Dataset, moralize
from .pipeline import PipelineConfig, learn, tune_nodes
from .simulation import (
    BenchmarkResult,
    SimConfig,
    metrics_from_structures,
    run_benchmark,
    simulate,
)

_OPTION_DEFAULTS = {
    "trials": 4,
    "clusters": None,
    "tau1": None,
    "tau2": None,
    "n0": 2,
    "cv_folds": 5,
    "grid_size": 20,
    "seed": 0,
    "homogeneous": False,
    "threads": 0,  # 0 means all available cores
    "restrict_to_neighborhood": False,
    "embed_dim": 1,
}


def _add_pipeline_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", metavar="FILE", help="flat key/value JSON")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--clusters", type=int)
    parser.add_argument("--tau1", type=float)
    parser.add_argument("--tau2", type=float)
    parser.add_argument("--n0", type=int)
    parser.add_argument("--cv-folds", type=int)
    parser.add_argument("--grid-size", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--homogeneous", action="store_const", const=True)
    parser.add_argument("--threads", type=int)
    parser.add_argument(
        "--restrict-to-neighborhood", action="store_const", const=True
    )
    parser.add_argument("--embed-dim", type=int)


def _resolve_options(args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags."""
    merged = dict(_OPTION_DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path) as handle:
            try:
                loaded = json.load(handle)
            except json.JSONDecodeError as err:
                raise io.ParseError(config_path, err.lineno, err.msg) from None
        if not isinstance(loaded, dict):
            raise io.ParseError(config_path, 1, "config must be a JSON object")
        for key, value in loaded.items():
            norm = key.replace("-", "_")
            if norm not in merged:
                raise io.ParseError(config_path, 1, f"unknown config key {key!r}")
            merged[norm] = value
    for key in _OPTION_DEFAULTS:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            merged[key] = flag_value
    return merged


def _pipeline_config(options: dict) -> PipelineConfig:
    return PipelineConfig(
        trials=options["trials"],
        clusters=options["clusters"],
        tau1=options["tau1"],
        tau2=options["tau2"],
        n0=options["n0"],
        cv_folds=options["cv_folds"],
        grid_size=options["grid_size"],
        seed=options["seed"],
        homogeneous=bool(options["homogeneous"]),
        threads=int(options["threads"]),
        restrict_to_neighborhood=bool(options["restrict_to_neighborhood"]),
        embed_dim=options["embed_dim"],
    )


def _load_dataset(args, options) -> Dataset:
    counts = io.read_counts(args.counts)
    if getattr(args, "covariates", None):
        covariates = io.read_covariates(args.covariates)
    else:
        covariates = np.zeros((counts.shape[0], 1))
    return Dataset(
        counts=counts, covariates=covariates, trials=int(options["trials"])
    )


def _load_side_inputs(args, dataset: Dataset):
    network = None
    embeddings = None
    if getattr(args, "network", None):
        network = io.read_network(args.network, dataset.n)
    if getattr(args, "embeddings", None):
        embeddings = io.read_embeddings(args.embeddings)
    return network, embeddings


def _input_digest_map(args, labels) -> dict:
    out = {}
    for label in labels:
        path = getattr(args, label, None)
        if path:
            out[label] = path
    return out


def _cmd_simulate(args) -> int:
    options = _resolve_options(args)
    a = args.a if args.a is not None else 0.8
    b = args.b if args.b is not None else 0.1 * a
    config = SimConfig(
        n=args.n,
        d_x=args.d_x,
        d_z=args.d_z,
        setup=args.setup,
        a=a,
        b=b,
        c_coef=args.c_coef,
        trials=int(options["trials"]),
        seed=int(options["seed"]),
    )
    data = simulate(config, with_network=bool(args.out_network))
    io.write_counts(args.out_counts, data.dataset.counts)
    if args.out_covariates:
        io.write_covariates(args.out_covariates, data.dataset.covariates)
    if args.out_network:
        io.write_network(args.out_network, data.network)
    if args.out_truth:
        moral = moralize(data.truth.dag)
        neighborhoods = {j: set() for j in range(config.d_x)}
        for u, v in moral:
            neighborhoods[u].add(v)
            neighborhoods[v].add(u)
        io.write_dag_json(
            args.out_truth,
            ordering=data.truth.ordering,
            edges=data.truth.dag.directed_edges,
            neighborhoods=neighborhoods,
            lambdas={},
        )
    return 0


def _cmd_embed_linear(args) -> int:
    covariates = io.read_covariates(args.covariates)
    network = io.read_network(args.network, covariates.shape[0])
    _, embeddings = fit_embedding_from_covariates(covariates, network, args.dim)
    io.write_embeddings(args.out, embeddings)
    if args.manifest:
        io.write_manifest(
            args.manifest,
            command="embed-linear",
            config={"dim": args.dim},
            inputs=_input_digest_map(args, ("covariates", "network")),
        )
    return 0


def _check_learn_inputs(args, options):
    if options["homogeneous"]:
        return
    if not (getattr(args, "network", None) or getattr(args, "embeddings", None)):
        raise ValueError(
            "personalized mode needs --network or --embeddings "
            "(or pass --homogeneous)"
        )
    if getattr(args, "network", None) and not getattr(args, "covariates", None):
        raise ValueError("--network requires --covariates to fit the embedding")


def _cmd_learn(args) -> int:
    options = _resolve_options(args)
    _check_learn_inputs(args, options)
    dataset = _load_dataset(args, options)
    network, embeddings = _load_side_inputs(args, dataset)
    config = _pipeline_config(options)
    result = learn(dataset, network=network, embeddings=embeddings, config=config)

    io.write_dag_json(
        args.out,
        ordering=result.estimate.ordering,
        edges=result.estimate.dag.directed_edges,
        neighborhoods=result.estimate.neighborhoods,
        lambdas=result.recovery_lambdas,
    )
    manifest_path = args.manifest or f"{args.out}.manifest.json"
    io.write_manifest(
        manifest_path,
        command="learn",
        config=options,
        inputs=_input_digest_map(
            args, ("counts", "covariates", "network", "embeddings")
        ),
        outputs={
            "neighborhood_lambdas": {
                str(j): lam for j, lam in result.neighborhood_lambdas.items()
            }
        },
    )
    return 0


def _cmd_tune(args) -> int:
    options = _resolve_options(args)
    _check_learn_inputs(args, options)
    dataset = _load_dataset(args, options)
    network, embeddings = _load_side_inputs(args, dataset)
    config = _pipeline_config(options)
    nodes = None
    if args.nodes:
        nodes = [int(v) for v in args.nodes.split(",")]
    report = tune_nodes(
        dataset, network=network, embeddings=embeddings, config=config, nodes=nodes
    )
    payload = {str(j): detail for j, detail in report.items()}
    with io.atomic_writer(args.out) as handle:
        handle.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_evaluate(args) -> int:
    est = io.read_dag_json(args.estimate)
    truth = io.read_dag_json(args.truth)
    d = len(truth["ordering"])
    est_dag = DagStructure(
        d_x=d, directed_edges=frozenset((int(u), int(v)) for u, v in est["edges"])
    )
    true_dag = DagStructure(
        d_x=d, directed_edges=frozenset((int(u), int(v)) for u, v in truth["edges"])
    )
    neighborhoods = {
        int(j): {int(u) for u in neigh}
        for j, neigh in est["neighborhoods"].items()
    }
    for j in range(d):
        neighborhoods.setdefault(j, set())
    metrics = metrics_from_structures(
        [int(v) for v in est["ordering"]],
        neighborhoods,
        est_dag,
        [int(v) for v in truth["ordering"]],
        true_dag,
    )
    payload = {
        "ordering_acc": metrics.ordering_acc,
        "moral_prec": metrics.moral_prec,
        "moral_rec": metrics.moral_rec,
        "dag_acc": metrics.dag_acc,
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        with io.atomic_writer(args.out) as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_benchmark(args) -> int:
    options = _resolve_options(args)
    sizes = [int(v) for v in args.n.split(",")]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    a = args.a if args.a is not None else 0.8
    b = args.b if args.b is not None else 0.1 * a
    grid = []
    for n in sizes:
        for method in methods:
            grid.append(
                (
                    SimConfig(
                        n=n,
                        d_x=args.d_x,
                        d_z=args.d_z,
                        setup=args.setup,
                        a=a,
                        b=b,
                        c_coef=args.c_coef,
                        trials=int(options["trials"]),
                        seed=int(options["seed"]),
                    ),
                    method,
                )
            )
    threads = int(options["threads"])
    if threads < 1:
        import os

        threads = os.cpu_count() or 1
    overrides = {
        key: options[key]
        for key in (
            "clusters", "tau1", "tau2", "n0", "cv_folds",
            "grid_size", "restrict_to_neighborhood",
        )
        if options[key] != _OPTION_DEFAULTS[key]
    }
    result: BenchmarkResult = run_benchmark(
        grid,
        repetitions=args.repetitions,
        seed=int(options["seed"]),
        threads=threads,
        pipeline_overrides=overrides or None,
    )
    io.write_benchmark_csv(args.out, result.rows)
    if args.out_aggregate:
        io.write_benchmark_aggregate_csv(args.out_aggregate, result.aggregate)
    failures = sum(1 for row in result.rows if row["error"])
    if failures:
        print(f"warning: {failures} run(s) failed", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bindag",
        description="Personalized DAG structure learning from count data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d-x", type=int, required=True)
    p.add_argument("--d-z", type=int, default=50)
    p.add_argument("--setup", choices=("linear", "nonlinear"), default="linear")
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--c-coef", type=float, default=3.0)
    p.add_argument("--out-counts", required=True)
    p.add_argument("--out-covariates")
    p.add_argument("--out-network")
    p.add_argument("--out-truth")
    _add_pipeline_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("embed-linear", help="fit the linear node embedding")
    p.add_argument("--covariates", required=True)
    p.add_argument("--network", required=True)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")
    p.set_defaults(func=_cmd_embed_linear)

    p = sub.add_parser("learn", help="run the full structure-learning pipeline")
    p.add_argument("--counts", required=True)
    p.add_argument("--covariates")
    p.add_argument("--network")
    p.add_argument("--embeddings")
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")
    _add_pipeline_flags(p)
    p.set_defaults(func=_cmd_learn)

    p = sub.add_parser("tune", help="per-node penalty selection detail")
    p.add_argument("--counts", required=True)
    p.add_argument("--covariates")
    p.add_argument("--network")
    p.add_argument("--embeddings")
    p.add_argument("--nodes", help="comma-separated node ids (default: all)")
    p.add_argument("--out", required=True)
    _add_pipeline_flags(p)
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("evaluate", help="score an estimate against a truth file")
    p.add_argument("--estimate", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("benchmark", help="simulated method comparison sweep")
    p.add_argument("--d-x", type=int, required=True)
    p.add_argument("--n", required=True, help="comma-separated sample sizes")
    p.add_argument("--methods", default="personalized,homogeneous")
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--setup", choices=("linear", "nonlinear"), default="linear")
    p.add_argument("--d-z", type=int, default=50)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--c-coef", type=float, default=3.0)
    p.add_argument("--out", required=True)
    p.add_argument("--out-aggregate")
    _add_pipeline_flags(p)
    p.set_defaults(func=_cmd_benchmark)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (io.ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
