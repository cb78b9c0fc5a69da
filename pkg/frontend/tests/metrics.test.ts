import { describe, expect, it } from "vitest";

import { fromRows } from "../src/matrix.js";
import { aucScore, silhouetteScore } from "../src/metrics.js";

describe("aucScore", () => {
  it("counts pairwise wins", () => {
    // 3 of 4 pairs rank a positive above a negative
    expect(aucScore([0.9, 0.8], [0.1, 0.85])).toBe(0.75);
  });

  it("gives half credit for ties", () => {
    expect(aucScore([0.5], [0.5])).toBe(0.5);
    expect(aucScore([0.5, 0.5], [0.5, 0.1])).toBe(0.75);
  });

  it("hits the extremes for separable scores", () => {
    expect(aucScore([0.7, 0.9], [0.1, 0.2])).toBe(1);
    expect(aucScore([0.1, 0.2], [0.7, 0.9])).toBe(0);
  });

  it("requires both classes", () => {
    expect(() => aucScore([], [0.5])).toThrow(/at least one/);
    expect(() => aucScore([0.5], [])).toThrow(/at least one/);
  });
});

describe("silhouetteScore", () => {
  it("matches the hand-computed value for two tight clusters", () => {
    const embeddings = fromRows([
      [0, 0],
      [0, 1],
      [10, 0],
      [10, 1],
    ]);
    const labels = Int32Array.from([1, 1, 2, 2]);
    // every point: a = 1, b = (10 + sqrt(101)) / 2, all four symmetric
    const b = (10 + Math.sqrt(101)) / 2;
    const want = (b - 1) / b;
    expect(Math.abs(silhouetteScore(embeddings, labels) - want)).toBeLessThanOrEqual(
      1e-12,
    );
  });

  it("scores singleton clusters as zero width", () => {
    const embeddings = fromRows([
      [0, 0],
      [5, 0],
      [5, 1],
    ]);
    const labels = Int32Array.from([1, 2, 2]);
    // singleton contributes 0; the pair score (5-1)/5 and (sqrt(26)-1)/sqrt(26)
    const want = (0 + (5 - 1) / 5 + (Math.sqrt(26) - 1) / Math.sqrt(26)) / 3;
    expect(Math.abs(silhouetteScore(embeddings, labels) - want)).toBeLessThanOrEqual(
      1e-12,
    );
  });

  it("is negative when clusters are interleaved", () => {
    const embeddings = fromRows([
      [0, 0],
      [10, 0],
      [0.5, 0],
      [10.5, 0],
    ]);
    const labels = Int32Array.from([1, 1, 2, 2]);
    expect(silhouetteScore(embeddings, labels)).toBeLessThan(0);
  });

  it("validates labels and cluster count", () => {
    const embeddings = fromRows([
      [0, 0],
      [1, 0],
    ]);
    expect(() =>
      silhouetteScore(embeddings, Int32Array.from([1])),
    ).toThrow(/one label per/);
    expect(() =>
      silhouetteScore(embeddings, Int32Array.from([1, 1])),
    ).toThrow(/two clusters/);
  });
});
