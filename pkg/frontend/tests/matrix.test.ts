import { describe, expect, it } from "vitest";

import {
  Matrix,
  fromRows,
  identity,
  matmul,
  matmulTransposeA,
  matmulTransposeB,
  zeros,
} from "../src/matrix.js";
import { Rng } from "../src/random.js";

function randomMatrix(rows: number, cols: number, rng: Rng): Matrix {
  const out = zeros(rows, cols);
  for (let i = 0; i < out.data.length; i++) {
    out.data[i] = rng.normal();
  }
  return out;
}

function naiveMatmul(a: Matrix, b: Matrix): Matrix {
  const out = zeros(a.rows, b.cols);
  for (let i = 0; i < a.rows; i++) {
    for (let j = 0; j < b.cols; j++) {
      let acc = 0;
      for (let k = 0; k < a.cols; k++) {
        acc += a.data[i * a.cols + k] * b.data[k * b.cols + j];
      }
      out.data[i * b.cols + j] = acc;
    }
  }
  return out;
}

function transpose(a: Matrix): Matrix {
  const out = zeros(a.cols, a.rows);
  for (let i = 0; i < a.rows; i++) {
    for (let j = 0; j < a.cols; j++) {
      out.data[j * a.rows + i] = a.data[i * a.cols + j];
    }
  }
  return out;
}

function maxAbsDiff(a: Matrix, b: Matrix): number {
  expect(a.rows).toBe(b.rows);
  expect(a.cols).toBe(b.cols);
  let worst = 0;
  for (let i = 0; i < a.data.length; i++) {
    worst = Math.max(worst, Math.abs(a.data[i] - b.data[i]));
  }
  return worst;
}

describe("matmul family", () => {
  it("matches a triple-loop product", () => {
    const rng = new Rng(1);
    const a = randomMatrix(4, 3, rng);
    const b = randomMatrix(3, 5, rng);
    expect(maxAbsDiff(matmul(a, b), naiveMatmul(a, b))).toBeLessThanOrEqual(
      1e-12,
    );
  });

  it("handles zero entries in the left operand", () => {
    const a = fromRows([
      [0, 2],
      [1, 0],
    ]);
    const b = fromRows([
      [3, 4],
      [5, 6],
    ]);
    const c = matmul(a, b);
    expect(Array.from(c.data)).toEqual([10, 12, 3, 4]);
  });

  it("transposed-left product equals multiplying the transpose", () => {
    const rng = new Rng(2);
    const a = randomMatrix(6, 3, rng);
    const b = randomMatrix(6, 4, rng);
    const got = matmulTransposeA(a, b);
    const want = naiveMatmul(transpose(a), b);
    expect(maxAbsDiff(got, want)).toBeLessThanOrEqual(1e-12);
  });

  it("transposed-right product equals multiplying the transpose", () => {
    const rng = new Rng(3);
    const a = randomMatrix(5, 3, rng);
    const b = randomMatrix(7, 3, rng);
    const got = matmulTransposeB(a, b);
    const want = naiveMatmul(a, transpose(b));
    expect(maxAbsDiff(got, want)).toBeLessThanOrEqual(1e-12);
  });

  it("rejects mismatched shapes", () => {
    const rng = new Rng(4);
    const a = randomMatrix(2, 3, rng);
    const b = randomMatrix(4, 2, rng);
    expect(() => matmul(a, b)).toThrow(/shape mismatch/);
    expect(() => matmulTransposeA(a, b)).toThrow(/shape mismatch/);
    expect(() => matmulTransposeB(a, b)).toThrow(/shape mismatch/);
  });
});

describe("constructors", () => {
  it("fromRows copies values row-major", () => {
    const m = fromRows([
      [1, 2, 3],
      [4, 5, 6],
    ]);
    expect(m.rows).toBe(2);
    expect(m.cols).toBe(3);
    expect(Array.from(m.data)).toEqual([1, 2, 3, 4, 5, 6]);
  });

  it("fromRows rejects ragged input", () => {
    expect(() => fromRows([[1, 2], [3]])).toThrow(/ragged/);
  });

  it("identity is the matmul unit", () => {
    const rng = new Rng(5);
    const a = randomMatrix(4, 4, rng);
    expect(maxAbsDiff(matmul(identity(4), a), a)).toBe(0);
    expect(maxAbsDiff(matmul(a, identity(4)), a)).toBe(0);
  });
});
