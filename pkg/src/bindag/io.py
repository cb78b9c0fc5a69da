"""File formats and atomic output.

CSV columns are fixed-name headers (x1..xd for counts, z1..zd for
covariates, h1..hd for embeddings); the network is a plain whitespace edge
list with each undirected pair listed once, 0-based. Outputs are written to
a temporary file in the destination directory and renamed into place, so a
failure never leaves a partial file. Manifests carry the config, seed,
package versions, and sha256 digests of every input, and deliberately no
timestamps: two runs of the same command produce byte-identical artifacts.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import sys
import tempfile
from contextlib import contextmanager

import numpy as np

from .model import RelationshipNetwork


class ParseError(ValueError):
    """Input file problem, pointing at the offending file and line."""

    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


@contextmanager
def atomic_writer(path, mode="w"):
    """Yields a handle to a temp file that is renamed onto path on success
    and removed on failure."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, mode, newline="" if "b" not in mode else None) as handle:
            yield handle
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_csv(path, header, rows, fmt):
    with atomic_writer(path) as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _read_table(path, prefix, cast, kind):
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 1, f"empty {kind} file") from None
        expected = [f"{prefix}{k}" for k in range(1, len(header) + 1)]
        if [h.strip() for h in header] != expected:
            raise ParseError(
                path, 1, f"header must be {prefix}1..{prefix}{len(header)}"
            )
        width = len(header)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ParseError(path, lineno, f"expected {width} cells, got {len(row)}")
            try:
                rows.append([cast(cell) for cell in row])
            except ValueError as err:
                raise ParseError(path, lineno, str(err)) from None
    if not rows:
        raise ParseError(path, 2, f"{kind} file has no data rows")
    return rows


def _int_cell(cell: str) -> int:
    text = cell.strip()
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"not an integer: {text!r}") from None


def _float_cell(cell: str) -> float:
    text = cell.strip()
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"not a number: {text!r}") from None


def write_counts(path, counts: np.ndarray):
    counts = np.asarray(counts)
    header = [f"x{k}" for k in range(1, counts.shape[1] + 1)]
    _write_csv(path, header, counts, lambda v: int(v))


def read_counts(path) -> np.ndarray:
    return np.array(_read_table(path, "x", _int_cell, "counts"), dtype=np.int64)


def write_covariates(path, covariates: np.ndarray):
    covariates = np.asarray(covariates, dtype=float)
    header = [f"z{k}" for k in range(1, covariates.shape[1] + 1)]
    _write_csv(path, header, covariates, lambda v: repr(float(v)))


def read_covariates(path) -> np.ndarray:
    return np.array(_read_table(path, "z", _float_cell, "covariates"), dtype=float)


def write_embeddings(path, embeddings: np.ndarray):
    embeddings = np.atleast_2d(np.asarray(embeddings, dtype=float))
    header = [f"h{k}" for k in range(1, embeddings.shape[1] + 1)]
    _write_csv(path, header, embeddings, lambda v: repr(float(v)))


def read_embeddings(path) -> np.ndarray:
    return np.array(_read_table(path, "h", _float_cell, "embeddings"), dtype=float)


def write_network(path, network: RelationshipNetwork):
    with atomic_writer(path) as handle:
        for i, j in sorted(network.edges):
            handle.write(f"{i} {j}\n")


def read_network(path, n: int) -> RelationshipNetwork:
    edges = set()
    with open(path) as handle:
        for lineno, line in enumerate(handle, start=1):
            text = line.strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ParseError(path, lineno, "expected two node ids per line")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(path, lineno, f"bad node id in {text!r}") from None
            if not (0 <= i < n and 0 <= j < n):
                raise ParseError(path, lineno, f"node id outside [0, {n})")
            if i == j:
                raise ParseError(path, lineno, "self loops are not allowed")
            edges.add((min(i, j), max(i, j)))
    return RelationshipNetwork(n=n, edges=frozenset(edges))


def _dumps(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_dag_json(path, ordering, edges, neighborhoods, lambdas):
    payload = {
        "ordering": [int(v) for v in ordering],
        "edges": sorted([int(u), int(v)] for u, v in edges),
        "neighborhoods": {
            str(int(j)): sorted(int(u) for u in neigh)
            for j, neigh in neighborhoods.items()
        },
        "lambdas": {str(int(j)): float(lam) for j, lam in lambdas.items()},
    }
    with atomic_writer(path) as handle:
        handle.write(_dumps(payload))


def read_dag_json(path) -> dict:
    with open(path) as handle:
        payload = json.load(handle)
    for key in ("ordering", "edges", "neighborhoods", "lambdas"):
        if key not in payload:
            raise ParseError(path, 1, f"missing key {key!r}")
    return payload


def package_versions() -> dict[str, str]:
    import scipy

    from . import __version__

    return {
        "bindag": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": ".".join(str(v) for v in sys.version_info[:3]),
    }


def write_manifest(
    path, command: str, config: dict, inputs: dict[str, str], outputs: dict | None = None
):
    """config: resolved hyperparameters. inputs: label -> file path; digests
    are computed here. No timestamps, so reruns are byte-identical."""
    payload = {
        "command": command,
        "config": config,
        "inputs": {
            label: {"path": str(p), "sha256": sha256_file(p)}
            for label, p in inputs.items()
        },
        "versions": package_versions(),
    }
    if outputs is not None:
        payload["outputs"] = outputs
    with atomic_writer(path) as handle:
        handle.write(_dumps(payload))


_RUN_COLUMNS = (
    "method", "setup", "d_x", "n", "seed",
    "ordering_acc", "moral_prec", "moral_rec", "dag_acc",
)


def _metric_cell(row, key):
    val = row[key]
    if isinstance(val, float) and np.isnan(val):
        return ""
    if isinstance(val, float):
        return repr(val)
    return val


def write_benchmark_csv(path, rows):
    with atomic_writer(path) as handle:
        writer = csv.writer(handle)
        writer.writerow(_RUN_COLUMNS)
        for row in rows:
            writer.writerow([_metric_cell(row, key) for key in _RUN_COLUMNS])


def write_benchmark_aggregate_csv(path, aggregate):
    metric_cols = []
    for key in ("ordering_acc", "moral_prec", "moral_rec", "dag_acc"):
        metric_cols.extend([f"{key}_mean", f"{key}_std"])
    columns = ["method", "setup", "d_x", "n", *metric_cols]
    with atomic_writer(path) as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in aggregate:
            writer.writerow([_metric_cell(row, key) for key in columns])
