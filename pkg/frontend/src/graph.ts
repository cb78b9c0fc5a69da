import { Network } from "./io.js";
import { Matrix, zeros } from "./matrix.js";
import { Rng } from "./random.js";

/** Sparse symmetric matrix in CSR form. */
export interface SparseMatrix {
  n: number;
  rowPtr: Int32Array;
  colIdx: Int32Array;
  values: Float64Array;
}

/**
 * Symmetric-normalized adjacency with self-loops:
 * D^(-1/2) (A + I) D^(-1/2), the standard graph-convolution operator.
 */
export function normalizedAdjacency(network: Network): SparseMatrix {
  const n = network.n;
  const degree = new Float64Array(n).fill(1); // self-loop contributes 1
  for (const [u, v] of network.edges) {
    degree[u] += 1;
    degree[v] += 1;
  }
  const invSqrt = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    invSqrt[i] = 1 / Math.sqrt(degree[i]);
  }
  const neighbors: Array<Array<[number, number]>> = Array.from(
    { length: n },
    () => [],
  );
  for (let i = 0; i < n; i++) {
    neighbors[i].push([i, invSqrt[i] * invSqrt[i]]);
  }
  for (const [u, v] of network.edges) {
    const w = invSqrt[u] * invSqrt[v];
    neighbors[u].push([v, w]);
    neighbors[v].push([u, w]);
  }
  let nnz = 0;
  for (const row of neighbors) {
    row.sort((a, b) => a[0] - b[0]);
    nnz += row.length;
  }
  const rowPtr = new Int32Array(n + 1);
  const colIdx = new Int32Array(nnz);
  const values = new Float64Array(nnz);
  let cursor = 0;
  for (let i = 0; i < n; i++) {
    rowPtr[i] = cursor;
    for (const [j, w] of neighbors[i]) {
      colIdx[cursor] = j;
      values[cursor] = w;
      cursor++;
    }
  }
  rowPtr[n] = cursor;
  return { n, rowPtr, colIdx, values };
}

/** Dense product S @ M where S is sparse (n x n) and M is (n x k). */
export function spmm(sparse: SparseMatrix, dense: Matrix): Matrix {
  if (dense.rows !== sparse.n) {
    throw new Error(
      `shape mismatch: sparse (${sparse.n},${sparse.n}) @ (${dense.rows},${dense.cols})`,
    );
  }
  const k = dense.cols;
  const out = zeros(sparse.n, k);
  for (let i = 0; i < sparse.n; i++) {
    const oRow = i * k;
    for (let idx = sparse.rowPtr[i]; idx < sparse.rowPtr[i + 1]; idx++) {
      const j = sparse.colIdx[idx];
      const w = sparse.values[idx];
      const dRow = j * k;
      for (let c = 0; c < k; c++) {
        out.data[oRow + c] += w * dense.data[dRow + c];
      }
    }
  }
  return out;
}

export interface EdgeSplit {
  train: Network;
  heldOut: Array<[number, number]>;
  /** Sampled non-edges, one per held-out edge, disjoint from all edges. */
  negatives: Array<[number, number]>;
}

/**
 * Holds out a fraction of edges (plus matched non-edges) for validation;
 * the training network keeps the rest.
 */
export function splitEdges(
  network: Network,
  holdOutFraction: number,
  rng: Rng,
): EdgeSplit {
  if (!(holdOutFraction > 0 && holdOutFraction < 1)) {
    throw new Error("hold-out fraction must be in (0, 1)");
  }
  const edges = network.edges;
  const order = new Uint32Array(edges.length);
  for (let i = 0; i < order.length; i++) order[i] = i;
  rng.shuffle(order);
  const heldCount = Math.max(1, Math.floor(edges.length * holdOutFraction));
  const heldOut: Array<[number, number]> = [];
  const train: Array<[number, number]> = [];
  for (let i = 0; i < order.length; i++) {
    const edge = edges[order[i]];
    if (i < heldCount) heldOut.push(edge);
    else train.push(edge);
  }
  train.sort((a, b) => (a[0] - b[0]) || (a[1] - b[1]));
  const isEdge = new Set<number>();
  for (const [u, v] of edges) isEdge.add(u * network.n + v);
  const negatives = sampleNonEdges(network.n, isEdge, heldCount, rng);
  return { train: { n: network.n, edges: train }, heldOut, negatives };
}

/** Uniformly sampled node pairs (u < v) avoiding every key in isEdge. */
export function sampleNonEdges(
  n: number,
  isEdge: Set<number>,
  count: number,
  rng: Rng,
): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  const taken = new Set<number>();
  while (out.length < count) {
    const a = rng.below(n);
    const b = rng.below(n);
    if (a === b) continue;
    const u = Math.min(a, b);
    const v = Math.max(a, b);
    const key = u * n + v;
    if (isEdge.has(key) || taken.has(key)) continue;
    taken.add(key);
    out.push([u, v]);
  }
  return out;
}

export interface CommunityGraph {
  network: Network;
  labels: Int32Array;
  covariates: Matrix;
}

/**
 * Two-community benchmark graph: each node gets a latent position (community
 * 2 shifted by two), and a pair links with probability
 * base * sigmoid(1 - 3 * |position gap|), where base is 0.8 within a
 * community and 0.08 across. Covariates embed the position in their first
 * two coordinates plus independent noise columns.
 */
export function twoCommunityGraph(
  n: number,
  dZ: number,
  seed: number,
): CommunityGraph {
  if (dZ < 2) {
    throw new Error("need at least two covariate columns");
  }
  const rng = new Rng(seed);
  const labels = new Int32Array(n);
  const covariates = zeros(n, dZ);
  const position = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    labels[i] = rng.uniform() < 0.5 ? 1 : 2;
    const shift = labels[i] === 2 ? 1 : 0;
    for (let j = 0; j < dZ; j++) {
      covariates.data[i * dZ + j] = shift + rng.normal();
    }
    position[i] =
      covariates.data[i * dZ] + covariates.data[i * dZ + 1];
  }
  const edges: Array<[number, number]> = [];
  for (let i = 0; i < n - 1; i++) {
    for (let j = i + 1; j < n; j++) {
      const base = labels[i] === labels[j] ? 0.8 : 0.08;
      const gap = Math.abs(position[i] - position[j]);
      const prob = base / (1 + Math.exp(-(1 - 3 * gap)));
      if (rng.uniform() < prob) {
        edges.push([i, j]);
      }
    }
  }
  return { network: { n, edges }, labels, covariates };
}
