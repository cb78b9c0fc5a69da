"""Synthetic two-community benchmark generator and evaluation metrics.

Observations carry a community label; covariates are Gaussian with a banded
covariance and a unit mean shift between communities. An undirected
relationship network mixes a label effect (within-community edges more
likely) with a nodal effect that decays as the planted one-dimensional
projections of two covariate vectors move apart. Counts follow a shared DAG
whose edge weights flip sign by community, so pooling the two communities
destroys the signal a per-community method can recover.

Random streams are split per stage (labels and covariates, network edges,
DAG and weights, counts), so skipping network generation leaves every other
draw unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import expit

from .model import (
    DagStructure,
    Dataset,
    RelationshipNetwork,
    _freeze,
    moralize,
)
from .recovery import DagEstimate

_STREAM_POPULATION = 0  # labels + covariates
_STREAM_NETWORK = 1
_STREAM_DAG = 2
_STREAM_COUNTS = 3


@dataclass(frozen=True)
class SimConfig:
    n: int
    d_x: int
    d_z: int = 50
    d_z0: int = 1
    setup: str = "linear"
    a: float = 0.8
    b: float = 0.08
    c_coef: float = 3.0
    trials: int = 4
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.b <= self.a <= 1:
            raise ValueError("need 0 < b <= a <= 1")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.setup not in ("linear", "nonlinear"):
            raise ValueError("setup must be linear or nonlinear")
        if self.n < 2 or self.d_x < 1 or self.d_z < 2 or self.d_z0 < 1:
            raise ValueError("dimensions too small")


@dataclass(frozen=True)
class GroundTruth:
    """True structure plus the per-community weight tables. weights has shape
    (2, d_x, d_x) indexed [community-1, parent, child], zero off the edges."""

    dag: DagStructure
    ordering: tuple[int, ...]
    weights: np.ndarray
    planted_f: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        d = self.dag.d_x
        if w.shape != (2, d, d):
            raise ValueError(f"weights must have shape (2, {d}, {d})")
        mask = np.zeros((d, d), dtype=bool)
        for u, v in self.dag.directed_edges:
            mask[u, v] = True
        if np.any(w[:, ~mask] != 0):
            raise ValueError("weights must vanish off the edge set")
        object.__setattr__(self, "weights", _freeze(w))
        object.__setattr__(
            self, "planted_f", _freeze(np.asarray(self.planted_f, dtype=float))
        )


@dataclass(frozen=True)
class MetricsRow:
    ordering_acc: float
    moral_prec: float
    moral_rec: float
    dag_acc: float
    precision_defined: bool = True

    def __post_init__(self):
        for name in ("ordering_acc", "moral_prec", "moral_rec", "dag_acc"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


def _stream(config: SimConfig, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((config.seed, stream)))


def _covariance(d_z: int) -> np.ndarray:
    lag = np.arange(d_z)
    row = np.where(lag < 5, 0.4 ** lag, 0.0)
    return toeplitz(row)


def planted_projection(config: SimConfig) -> np.ndarray:
    """The generator's projection: ones on the first two coordinates,
    replicated across the planted columns."""
    f = np.zeros((config.d_z, config.d_z0))
    f[:2, :] = 1.0
    return f


def gen_population(config: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    """Community labels in {1, 2} and covariates. Community 1 is centered at
    zero, community 2 at the all-ones vector; a unit shift keeps the
    communities separable but overlapping. The nonlinear setup passes the
    Gaussian draw through an element-wise sine."""
    rng = _stream(config, _STREAM_POPULATION)
    labels = rng.integers(1, 3, size=config.n)
    chol = np.linalg.cholesky(_covariance(config.d_z))
    shift = (labels == 2).astype(float)[:, None]
    z = shift + rng.standard_normal((config.n, config.d_z)) @ chol.T
    if config.setup == "nonlinear":
        z = np.sin(z)
    return labels, z


def edge_probability(config: SimConfig, same_community, projected_gap):
    """Label effect times the logistic nodal effect exp(1-<c,g>)/(1+exp(..))
    where g is the element-wise absolute projected covariate gap."""
    base = np.where(same_community, config.a, config.b)
    return base * expit(1.0 - config.c_coef * projected_gap)


def gen_network(
    config: SimConfig,
) -> tuple[np.ndarray, np.ndarray, RelationshipNetwork]:
    labels, z = gen_population(config)
    rng = _stream(config, _STREAM_NETWORK)
    proj = z @ planted_projection(config)  # (n, d_z0)
    edges: list[tuple[int, int]] = []
    for i in range(config.n - 1):
        gap = np.abs(proj[i + 1 :] - proj[i]).sum(axis=1)
        prob = edge_probability(config, labels[i + 1 :] == labels[i], gap)
        hit = np.flatnonzero(rng.random(prob.size) < prob)
        edges.extend((i, int(i + 1 + k)) for k in hit)
    network = RelationshipNetwork(n=config.n, edges=frozenset(edges))
    return labels, z, network


def gen_dag_sem(config: SimConfig) -> GroundTruth:
    """Chain 0 -> 1 -> ... plus one extra random earlier parent for every node
    from the third onward; per-community edge weights are negative in
    community 1 and positive in community 2."""
    if config.d_x < 2:
        raise ValueError("need at least 2 nodes")
    rng = _stream(config, _STREAM_DAG)
    d = config.d_x
    edges = {(j, j + 1) for j in range(d - 1)}
    for j in range(2, d):
        edges.add((int(rng.integers(0, j - 1)), j))
    ordered = sorted(edges)
    w = np.zeros((2, d, d))
    low = rng.uniform(-1.0, -0.5, size=len(ordered))
    high = rng.uniform(0.5, 1.0, size=len(ordered))
    for k, (u, v) in enumerate(ordered):
        w[0, u, v] = low[k]
        w[1, u, v] = high[k]
    dag = DagStructure(d_x=d, directed_edges=frozenset(edges))
    return GroundTruth(
        dag=dag,
        ordering=tuple(range(d)),
        weights=w,
        planted_f=planted_projection(config)[:, 0],
    )


def sample_counts(
    truth: GroundTruth, labels: np.ndarray, config: SimConfig
) -> np.ndarray:
    """Counts drawn node by node in topological order: Binomial(T, sigmoid of
    the community-weighted sum of parent counts), intercepts zero."""
    rng = _stream(config, _STREAM_COUNTS)
    n, d = len(labels), truth.dag.d_x
    community = np.asarray(labels, dtype=np.int64) - 1
    x = np.zeros((n, d), dtype=np.int64)
    for j in truth.dag.topological_order():
        parents = sorted(truth.dag.parents(j))
        eta = np.zeros(n)
        for l in parents:
            eta += truth.weights[community, l, j] * x[:, l]
        x[:, j] = rng.binomial(config.trials, expit(eta))
    return x


@dataclass(frozen=True)
class SimData:
    labels: np.ndarray
    dataset: Dataset
    network: RelationshipNetwork | None
    truth: GroundTruth


def simulate(config: SimConfig, with_network: bool = True) -> SimData:
    """Full draw. Skipping the network leaves labels, covariates, the DAG,
    and the counts bit-identical (separate random streams per stage)."""
    if with_network:
        labels, z, network = gen_network(config)
    else:
        labels, z = gen_population(config)
        network = None
    truth = gen_dag_sem(config)
    counts = sample_counts(truth, labels, config)
    dataset = Dataset(counts=counts, covariates=z, trials=config.trials)
    return SimData(labels=labels, dataset=dataset, network=network, truth=truth)


def _undirected_neighbor_pairs(neighborhoods: dict[int, set[int]]):
    pairs = set()
    for j, neigh in neighborhoods.items():
        for u in neigh:
            pairs.add((min(j, u), max(j, u)))
    return pairs


def metrics_from_structures(
    est_ordering,
    est_neighborhoods: dict[int, set[int]],
    est_dag: DagStructure,
    true_ordering,
    true_dag: DagStructure,
) -> MetricsRow:
    d = true_dag.d_x
    if est_dag.d_x != d or len(est_ordering) != d or len(true_ordering) != d:
        raise ValueError("estimate and truth disagree on node count")

    order_hits = sum(a == b for a, b in zip(est_ordering, true_ordering))
    ordering_acc = order_hits / d

    est_pairs = _undirected_neighbor_pairs(est_neighborhoods)
    true_pairs = moralize(true_dag)
    defined = len(est_pairs) > 0
    if not est_pairs and not true_pairs:
        prec, rec = 1.0, 1.0
        defined = True
    else:
        hits = len(est_pairs & true_pairs)
        prec = hits / len(est_pairs) if est_pairs else 0.0
        rec = hits / len(true_pairs) if true_pairs else 0.0

    sym_diff = est_dag.directed_edges ^ true_dag.directed_edges
    dag_acc = 1.0 - len(sym_diff) / (d * (d - 1)) if d > 1 else 1.0

    return MetricsRow(
        ordering_acc=ordering_acc,
        moral_prec=prec,
        moral_rec=rec,
        dag_acc=dag_acc,
        precision_defined=defined,
    )


def eval_metrics(estimate: DagEstimate, truth: GroundTruth) -> MetricsRow:
    return metrics_from_structures(
        estimate.ordering,
        estimate.neighborhoods,
        estimate.dag,
        truth.ordering,
        truth.dag,
    )


@dataclass(frozen=True)
class BenchmarkResult:
    """Per-run rows plus mean/std aggregates, both as plain dicts ready for
    CSV. Failed runs keep their row with an error note and NaN metrics."""

    rows: tuple[dict, ...]
    aggregate: tuple[dict, ...]


_METRIC_KEYS = ("ordering_acc", "moral_prec", "moral_rec", "dag_acc")


def _derived_seed(seed: int, config: SimConfig, rep: int) -> int:
    setup_id = 0 if config.setup == "linear" else 1
    ss = np.random.SeedSequence((seed, rep, config.n, config.d_x, setup_id))
    return int(ss.generate_state(1)[0])


def _run_one(
    config: SimConfig,
    method: str,
    base_seed: int,
    rep: int,
    pipeline_overrides: dict | None = None,
) -> dict:
    from .pipeline import PipelineConfig, learn

    run_seed = _derived_seed(base_seed, config, rep)
    cfg = replace(config, seed=run_seed)
    row = {
        "method": method,
        "setup": cfg.setup,
        "d_x": cfg.d_x,
        "n": cfg.n,
        "seed": run_seed,
    }
    try:
        data = simulate(cfg, with_network=(method == "personalized"))
        pipe = PipelineConfig(
            trials=cfg.trials,
            seed=run_seed,
            homogeneous=(method == "homogeneous"),
            embed_dim=cfg.d_z0,
            **(pipeline_overrides or {}),
        )
        result = learn(data.dataset, network=data.network, config=pipe)
        metrics = eval_metrics(result.estimate, data.truth)
        for key in _METRIC_KEYS:
            row[key] = getattr(metrics, key)
        row["error"] = ""
    except Exception as exc:  # recorded, not fatal to the sweep
        for key in _METRIC_KEYS:
            row[key] = math.nan
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_benchmark(
    grid: Iterable[tuple[SimConfig, str]],
    repetitions: int,
    seed: int,
    threads: int = 1,
    pipeline_overrides: dict | None = None,
) -> BenchmarkResult:
    """Every (config, method) pair runs `repetitions` times on freshly drawn
    data; both methods see identical draws for a given (config, repetition).
    Row order and content do not depend on thread count."""
    entries = list(grid)
    for _, method in entries:
        if method not in ("personalized", "homogeneous"):
            raise ValueError(f"unknown method {method!r}")

    tasks = [
        (e, r, cfg, method)
        for e, (cfg, method) in enumerate(entries)
        for r in range(repetitions)
    ]
    results: dict[tuple[int, int], dict] = {}
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = {
                (e, r): pool.submit(
                    _run_one, cfg, method, seed, r, pipeline_overrides
                )
                for e, r, cfg, method in tasks
            }
            for key, fut in futures.items():
                results[key] = fut.result()
    else:
        for e, r, cfg, method in tasks:
            results[(e, r)] = _run_one(cfg, method, seed, r, pipeline_overrides)

    rows = [results[(e, r)] for e in range(len(entries)) for r in range(repetitions)]

    aggregate = []
    for e, (cfg, method) in enumerate(entries):
        sub = [results[(e, r)] for r in range(repetitions)]
        agg = {
            "method": method,
            "setup": cfg.setup,
            "d_x": cfg.d_x,
            "n": cfg.n,
            "runs": len(sub),
            "failures": sum(1 for row in sub if row["error"]),
        }
        for key in _METRIC_KEYS:
            vals = np.array([row[key] for row in sub if not row["error"]])
            if vals.size:
                agg[f"{key}_mean"] = float(vals.mean())
                agg[f"{key}_std"] = (
                    float(vals.std(ddof=1)) if vals.size > 1 else 0.0
                )
            else:
                agg[f"{key}_mean"] = math.nan
                agg[f"{key}_std"] = math.nan
        aggregate.append(agg)

    return BenchmarkResult(rows=tuple(rows), aggregate=tuple(aggregate))
