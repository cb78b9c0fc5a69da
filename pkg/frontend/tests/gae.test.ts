import { beforeAll, describe, expect, it } from "vitest";

import {
  GaeConfig,
  TrainResult,
  TrainingError,
  linkScore,
  trainGae,
} from "../src/gae.js";
import {
  CommunityGraph,
  EdgeSplit,
  splitEdges,
  twoCommunityGraph,
} from "../src/graph.js";
import { aucScore, silhouetteScore } from "../src/metrics.js";
import { Rng } from "../src/random.js";

const BENCHMARK_CONFIG: GaeConfig = { latentDim: 4, epochs: 200, seed: 1 };

let graph: CommunityGraph;
let split: EdgeSplit;
let result: TrainResult;

beforeAll(() => {
  graph = twoCommunityGraph(500, 50, 1);
  split = splitEdges(graph.network, 0.1, new Rng(101));
  result = trainGae(graph.covariates, split.train, BENCHMARK_CONFIG);
});

function heldOutAuc(r: TrainResult): number {
  const pos = split.heldOut.map(([u, v]) => linkScore(r.embeddings, u, v));
  const neg = split.negatives.map(([u, v]) => linkScore(r.embeddings, u, v));
  return aucScore(pos, neg);
}

function windowMeans(losses: number[], width: number): number[] {
  const tailLength = Math.floor(losses.length / 10);
  const count = Math.floor(tailLength / width);
  const tail = losses.slice(losses.length - count * width);
  const means: number[] = [];
  for (let w = 0; w < count; w++) {
    let acc = 0;
    for (let i = 0; i < width; i++) acc += tail[w * width + i];
    means.push(acc / width);
  }
  return means;
}

describe("two-community benchmark", () => {
  it("reconstructs held-out links with AUC at least 0.85", () => {
    expect(heldOutAuc(result)).toBeGreaterThanOrEqual(0.85);
  });

  it("keeps every epoch loss finite", () => {
    expect(result.losses.length).toBe(BENCHMARK_CONFIG.epochs);
    for (const loss of result.losses) {
      expect(Number.isFinite(loss)).toBe(true);
    }
  });

  it("loss is non-increasing over the final tenth, in 10-epoch windows", () => {
    const means = windowMeans(result.losses, 10);
    expect(means.length).toBeGreaterThanOrEqual(2);
    for (let i = 1; i < means.length; i++) {
      expect(means[i]).toBeLessThanOrEqual(means[i - 1]);
    }
  });

  it("ends far below the starting loss", () => {
    const first = result.losses[0];
    const last = result.losses[result.losses.length - 1];
    expect(last).toBeLessThan(0.75 * first);
  });

  it("is deterministic: same graph and seed, identical embeddings", () => {
    const again = trainGae(graph.covariates, split.train, BENCHMARK_CONFIG);
    expect(Array.from(again.embeddings.data)).toEqual(
      Array.from(result.embeddings.data),
    );
    expect(again.losses).toEqual(result.losses);
  });

  it("scores pairs through a logistic link", () => {
    for (const [u, v] of split.heldOut.slice(0, 25)) {
      const score = linkScore(result.embeddings, u, v);
      expect(score).toBeGreaterThan(0);
      expect(score).toBeLessThan(1);
    }
  });
});

describe("featureless mode", () => {
  it("separates the communities from topology alone", () => {
    const r = trainGae(null, split.train, BENCHMARK_CONFIG);
    expect(silhouetteScore(r.embeddings, graph.labels)).toBeGreaterThan(0);
    expect(heldOutAuc(r)).toBeGreaterThanOrEqual(0.85);
  });
});

describe("variational mode", () => {
  it("trains to a useful reconstruction", () => {
    const r = trainGae(graph.covariates, split.train, {
      ...BENCHMARK_CONFIG,
      variational: true,
    });
    for (const loss of r.losses) {
      expect(Number.isFinite(loss)).toBe(true);
    }
    for (const value of r.embeddings.data) {
      expect(Number.isFinite(value)).toBe(true);
    }
    expect(heldOutAuc(r)).toBeGreaterThanOrEqual(0.8);
  });
});

describe("divergence reporting", () => {
  it("raises a training error that names the epoch", () => {
    const small = twoCommunityGraph(120, 10, 3);
    const smallSplit = splitEdges(small.network, 0.1, new Rng(5));
    const explosive: GaeConfig = {
      latentDim: 4,
      epochs: 30,
      seed: 1,
      learningRate: 1e4,
      variational: true,
    };
    try {
      trainGae(small.covariates, smallSplit.train, explosive);
      expect.unreachable("should have diverged");
    } catch (err) {
      expect(err).toBeInstanceOf(TrainingError);
      const trainingErr = err as TrainingError;
      expect(trainingErr.epoch).toBeGreaterThanOrEqual(1);
      expect(trainingErr.epoch).toBeLessThanOrEqual(30);
      expect(trainingErr.message).toContain(`epoch ${trainingErr.epoch}`);
    }
  });
});

describe("config validation", () => {
  const tiny = twoCommunityGraph(30, 3, 2);

  it("rejects non-positive or fractional dimensions and epochs", () => {
    expect(() =>
      trainGae(tiny.covariates, tiny.network, { latentDim: 0, epochs: 10, seed: 1 }),
    ).toThrow(/latent dimension/);
    expect(() =>
      trainGae(tiny.covariates, tiny.network, { latentDim: 2.5, epochs: 10, seed: 1 }),
    ).toThrow(/latent dimension/);
    expect(() =>
      trainGae(tiny.covariates, tiny.network, { latentDim: 2, epochs: 0, seed: 1 }),
    ).toThrow(/epochs/);
  });

  it("rejects an empty network", () => {
    expect(() =>
      trainGae(tiny.covariates, { n: 30, edges: [] }, { latentDim: 2, epochs: 5, seed: 1 }),
    ).toThrow(/no edges/);
  });

  it("rejects feature row mismatch", () => {
    const other = twoCommunityGraph(20, 3, 4);
    expect(() =>
      trainGae(other.covariates, tiny.network, { latentDim: 2, epochs: 5, seed: 1 }),
    ).toThrow(/rows/);
  });
});

describe("resampled negatives", () => {
  it("still trains with finite losses", () => {
    const small = twoCommunityGraph(100, 5, 6);
    const smallSplit = splitEdges(small.network, 0.1, new Rng(9));
    const r = trainGae(small.covariates, smallSplit.train, {
      latentDim: 3,
      epochs: 40,
      seed: 2,
      resampleNegatives: true,
    });
    expect(r.losses.length).toBe(40);
    for (const loss of r.losses) {
      expect(Number.isFinite(loss)).toBe(true);
    }
    expect(r.losses[39]).toBeLessThan(r.losses[0]);
  });
});
