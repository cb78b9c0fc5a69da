import { Matrix } from "./matrix.js";

/**
 * Area under the ROC curve from positive and negative scores, computed by
 * exact pair counting with half credit for ties.
 */
export function aucScore(positive: number[], negative: number[]): number {
  if (positive.length === 0 || negative.length === 0) {
    throw new Error("need at least one positive and one negative score");
  }
  let wins = 0;
  for (const p of positive) {
    for (const q of negative) {
      if (p > q) wins += 1;
      else if (p === q) wins += 0.5;
    }
  }
  return wins / (positive.length * negative.length);
}

function euclidean(a: Matrix, i: number, j: number): number {
  const d = a.cols;
  let acc = 0;
  for (let c = 0; c < d; c++) {
    const diff = a.data[i * d + c] - a.data[j * d + c];
    acc += diff * diff;
  }
  return Math.sqrt(acc);
}

/**
 * Mean silhouette coefficient over samples: (b - a) / max(a, b) with a the
 * mean distance to the own cluster and b the smallest mean distance to any
 * other cluster. Requires at least two clusters.
 */
export function silhouetteScore(
  embeddings: Matrix,
  labels: Int32Array,
): number {
  const n = embeddings.rows;
  if (labels.length !== n) {
    throw new Error("one label per embedding row required");
  }
  const clusters = [...new Set(labels)];
  if (clusters.length < 2) {
    throw new Error("silhouette needs at least two clusters");
  }
  const byCluster = new Map<number, number[]>();
  for (const c of clusters) byCluster.set(c, []);
  for (let i = 0; i < n; i++) byCluster.get(labels[i])!.push(i);

  let total = 0;
  for (let i = 0; i < n; i++) {
    const own = byCluster.get(labels[i])!;
    let a = 0;
    if (own.length > 1) {
      for (const j of own) {
        if (j !== i) a += euclidean(embeddings, i, j);
      }
      a /= own.length - 1;
    }
    let b = Infinity;
    for (const c of clusters) {
      if (c === labels[i]) continue;
      const members = byCluster.get(c)!;
      let mean = 0;
      for (const j of members) mean += euclidean(embeddings, i, j);
      mean /= members.length;
      if (mean < b) b = mean;
    }
    const width = own.length > 1 ? (b - a) / Math.max(a, b) : 0;
    total += width;
  }
  return total / n;
}
