import { Network } from "./io.js";
import {
  Matrix,
  identity,
  matmul,
  matmulTransposeA,
  matmulTransposeB,
  zeros,
} from "./matrix.js";
import {
  SparseMatrix,
  normalizedAdjacency,
  sampleNonEdges,
  spmm,
} from "./graph.js";
import { Rng } from "./random.js";

export interface GaeConfig {
  /** Latent (output) dimension, at least 1. */
  latentDim: number;
  /** Hidden width of the first graph-convolution layer. */
  hiddenWidth?: number;
  /** Training epochs, at least 1. */
  epochs: number;
  /** Adam step size. */
  learningRate?: number;
  /** Seed for initialization and negative sampling. */
  seed: number;
  /** Variational encoder (mean + log-variance heads with a KL term). */
  variational?: boolean;
  /** Non-edges sampled per edge. */
  negativeRatio?: number;
  /**
   * Redraw the non-edge sample every epoch instead of once per run.
   * The default (false) keeps the objective fixed, so the reported loss
   * settles monotonically once training converges.
   */
  resampleNegatives?: boolean;
}

const DEFAULTS = {
  hiddenWidth: 32,
  learningRate: 0.01,
  negativeRatio: 1,
};

/** Training diverged; carries the epoch at which the loss left the reals. */
export class TrainingError extends Error {
  readonly epoch: number;

  constructor(epoch: number, message: string) {
    super(message);
    this.name = "TrainingError";
    this.epoch = epoch;
  }
}

export interface TrainResult {
  /** One embedding row per node; the encoder mean in variational mode. */
  embeddings: Matrix;
  /** Per-epoch training loss. */
  losses: number[];
}

function softplus(x: number): number {
  return Math.max(x, 0) + Math.log1p(Math.exp(-Math.abs(x)));
}

function sigmoid(x: number): number {
  return x >= 0 ? 1 / (1 + Math.exp(-x)) : Math.exp(x) / (1 + Math.exp(x));
}

function glorot(rows: number, cols: number, rng: Rng): Matrix {
  const limit = Math.sqrt(6 / (rows + cols));
  const out = zeros(rows, cols);
  for (let i = 0; i < out.data.length; i++) {
    out.data[i] = (2 * rng.uniform() - 1) * limit;
  }
  return out;
}

/** Adam state for one weight matrix. */
class AdamState {
  private m: Float64Array;
  private v: Float64Array;
  private step = 0;

  constructor(size: number) {
    this.m = new Float64Array(size);
    this.v = new Float64Array(size);
  }

  update(weights: Matrix, grad: Matrix, lr: number): void {
    const beta1 = 0.9;
    const beta2 = 0.999;
    const eps = 1e-8;
    this.step += 1;
    const correct1 = 1 - Math.pow(beta1, this.step);
    const correct2 = 1 - Math.pow(beta2, this.step);
    for (let i = 0; i < weights.data.length; i++) {
      const g = grad.data[i];
      this.m[i] = beta1 * this.m[i] + (1 - beta1) * g;
      this.v[i] = beta2 * this.v[i] + (1 - beta2) * g * g;
      const mHat = this.m[i] / correct1;
      const vHat = this.v[i] / correct2;
      weights.data[i] -= (lr * mHat) / (Math.sqrt(vHat) + eps);
    }
  }
}

interface PairBatch {
  pairs: Array<[number, number]>;
  labels: Float64Array;
}

function epochPairs(
  network: Network,
  isEdge: Set<number>,
  ratio: number,
  rng: Rng,
): PairBatch {
  const positives = network.edges;
  const negatives = sampleNonEdges(
    network.n,
    isEdge,
    Math.max(1, Math.round(positives.length * ratio)),
    rng,
  );
  const pairs = [...positives, ...negatives];
  const labels = new Float64Array(pairs.length);
  labels.fill(1, 0, positives.length);
  return { pairs, labels };
}

/**
 * Plain (or variational) graph auto-encoder: a two-layer graph convolution
 * encodes each node, an inner-product decoder with a logistic link scores
 * node pairs, and the reconstruction cross-entropy over edges plus sampled
 * non-edges is minimized with Adam. Deterministic for a fixed config.
 *
 * Pass null features to use identity input features (featureless mode).
 */
export function trainGae(
  features: Matrix | null,
  network: Network,
  config: GaeConfig,
): TrainResult {
  if (!Number.isInteger(config.latentDim) || config.latentDim < 1) {
    throw new Error(`latent dimension must be a positive integer, got ${config.latentDim}`);
  }
  if (!Number.isInteger(config.epochs) || config.epochs < 1) {
    throw new Error(`epochs must be a positive integer, got ${config.epochs}`);
  }
  if (network.edges.length === 0) {
    throw new Error("network has no edges to reconstruct");
  }
  const n = network.n;
  const x = features ?? identity(n);
  if (x.rows !== n) {
    throw new Error(`features have ${x.rows} rows, network has ${n} nodes`);
  }
  const hidden = config.hiddenWidth ?? DEFAULTS.hiddenWidth;
  const lr = config.learningRate ?? DEFAULTS.learningRate;
  const ratio = config.negativeRatio ?? DEFAULTS.negativeRatio;
  const latent = config.latentDim;
  const variational = config.variational ?? false;

  const adjacency: SparseMatrix = normalizedAdjacency(network);
  const smoothed = spmm(adjacency, x); // fixed first-layer input

  const rng = new Rng(config.seed);
  const w0 = glorot(x.cols, hidden, rng);
  const w1 = glorot(hidden, latent, rng);
  const wLogVar = variational ? glorot(hidden, latent, rng) : null;
  const adam0 = new AdamState(w0.data.length);
  const adam1 = new AdamState(w1.data.length);
  const adamLogVar = wLogVar ? new AdamState(wLogVar.data.length) : null;

  const isEdge = new Set<number>();
  for (const [u, v] of network.edges) isEdge.add(u * n + v);

  const resample = config.resampleNegatives ?? false;
  let batch = epochPairs(network, isEdge, ratio, rng);

  const losses: number[] = [];
  let mean: Matrix = zeros(n, latent);

  for (let epoch = 1; epoch <= config.epochs; epoch++) {
    // encoder forward
    const pre = matmul(smoothed, w0);
    const hiddenAct = zeros(n, hidden);
    for (let i = 0; i < pre.data.length; i++) {
      hiddenAct.data[i] = pre.data[i] > 0 ? pre.data[i] : 0;
    }
    const conv = spmm(adjacency, hiddenAct);
    mean = matmul(conv, w1);
    let z = mean;
    let logVar: Matrix | null = null;
    let noise: Float64Array | null = null;
    if (variational && wLogVar) {
      logVar = matmul(conv, wLogVar);
      noise = new Float64Array(n * latent);
      z = zeros(n, latent);
      for (let i = 0; i < noise.length; i++) {
        noise[i] = rng.normal();
        z.data[i] =
          mean.data[i] + Math.exp(0.5 * logVar.data[i]) * noise[i];
      }
    }

    // decoder loss over edges and sampled non-edges
    if (resample && epoch > 1) {
      batch = epochPairs(network, isEdge, ratio, rng);
    }
    const count = batch.pairs.length;
    const gradZ = zeros(n, latent);
    let loss = 0;
    for (let b = 0; b < count; b++) {
      const [u, v] = batch.pairs[b];
      const y = batch.labels[b];
      let score = 0;
      for (let c = 0; c < latent; c++) {
        score += z.data[u * latent + c] * z.data[v * latent + c];
      }
      loss += y > 0 ? softplus(-score) : softplus(score);
      const residual = (sigmoid(score) - y) / count;
      for (let c = 0; c < latent; c++) {
        gradZ.data[u * latent + c] += residual * z.data[v * latent + c];
        gradZ.data[v * latent + c] += residual * z.data[u * latent + c];
      }
    }
    loss /= count;

    let gradMean = gradZ;
    let gradLogVar: Matrix | null = null;
    if (variational && logVar && noise) {
      // KL(q || N(0, I)) on the same per-pair scale as the reconstruction
      // term, so the prior regularizes without collapsing the means
      let kl = 0;
      gradMean = zeros(n, latent);
      gradLogVar = zeros(n, latent);
      for (let i = 0; i < logVar.data.length; i++) {
        const lv = logVar.data[i];
        const mu = mean.data[i];
        kl += -0.5 * (1 + lv - mu * mu - Math.exp(lv));
        gradMean.data[i] = gradZ.data[i] + mu / count;
        gradLogVar.data[i] =
          gradZ.data[i] * noise[i] * 0.5 * Math.exp(0.5 * lv) +
          (0.5 * (Math.exp(lv) - 1)) / count;
      }
      loss += kl / count;
    }

    if (!Number.isFinite(loss)) {
      throw new TrainingError(epoch, `non-finite loss at epoch ${epoch}`);
    }
    losses.push(loss);

    // encoder backward
    const gradW1 = matmulTransposeA(conv, gradMean);
    let gradConv = matmulTransposeB(gradMean, w1);
    if (variational && wLogVar && gradLogVar) {
      const fromLogVar = matmulTransposeB(gradLogVar, wLogVar);
      for (let i = 0; i < gradConv.data.length; i++) {
        gradConv.data[i] += fromLogVar.data[i];
      }
    }
    const gradHidden = spmm(adjacency, gradConv); // adjacency is symmetric
    for (let i = 0; i < gradHidden.data.length; i++) {
      if (pre.data[i] <= 0) gradHidden.data[i] = 0;
    }
    const gradW0 = matmulTransposeA(smoothed, gradHidden);

    // step size anneals to a tenth of its initial value to settle the tail
    const anneal =
      config.epochs > 1 ? 1 - (0.9 * (epoch - 1)) / (config.epochs - 1) : 1;
    const stepLr = lr * anneal;
    adam0.update(w0, gradW0, stepLr);
    adam1.update(w1, gradW1, stepLr);
    if (variational && wLogVar && adamLogVar && gradLogVar) {
      adamLogVar.update(wLogVar, matmulTransposeA(conv, gradLogVar), stepLr);
    }
  }

  // final deterministic forward pass with the trained weights
  const pre = matmul(smoothed, w0);
  for (let i = 0; i < pre.data.length; i++) {
    if (pre.data[i] < 0) pre.data[i] = 0;
  }
  const conv = spmm(adjacency, pre);
  const embeddings = matmul(conv, w1);
  return { embeddings, losses };
}

/** Decoder link score for a node pair under trained embeddings. */
export function linkScore(
  embeddings: Matrix,
  u: number,
  v: number,
): number {
  const d = embeddings.cols;
  let score = 0;
  for (let c = 0; c < d; c++) {
    score += embeddings.data[u * d + c] * embeddings.data[v * d + c];
  }
  return sigmoid(score);
}
