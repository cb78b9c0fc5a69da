/** Dense row-major float64 matrix. */
export interface Matrix {
  rows: number;
  cols: number;
  data: Float64Array;
}

export function zeros(rows: number, cols: number): Matrix {
  return { rows, cols, data: new Float64Array(rows * cols) };
}

export function fromRows(values: number[][]): Matrix {
  const rows = values.length;
  const cols = rows > 0 ? values[0].length : 0;
  const out = zeros(rows, cols);
  for (let i = 0; i < rows; i++) {
    if (values[i].length !== cols) {
      throw new Error("ragged rows");
    }
    out.data.set(values[i], i * cols);
  }
  return out;
}

/** C = A @ B for dense operands, ikj loop order. */
export function matmul(a: Matrix, b: Matrix): Matrix {
  if (a.cols !== b.rows) {
    throw new Error(`shape mismatch: (${a.rows},${a.cols}) @ (${b.rows},${b.cols})`);
  }
  const out = zeros(a.rows, b.cols);
  for (let i = 0; i < a.rows; i++) {
    const aRow = i * a.cols;
    const oRow = i * b.cols;
    for (let k = 0; k < a.cols; k++) {
      const scale = a.data[aRow + k];
      if (scale === 0) continue;
      const bRow = k * b.cols;
      for (let j = 0; j < b.cols; j++) {
        out.data[oRow + j] += scale * b.data[bRow + j];
      }
    }
  }
  return out;
}

/** C = A^T @ B where A is (n, p) and B is (n, q). */
export function matmulTransposeA(a: Matrix, b: Matrix): Matrix {
  if (a.rows !== b.rows) {
    throw new Error(`shape mismatch: (${a.rows},${a.cols})^T @ (${b.rows},${b.cols})`);
  }
  const out = zeros(a.cols, b.cols);
  for (let n = 0; n < a.rows; n++) {
    const aRow = n * a.cols;
    const bRow = n * b.cols;
    for (let i = 0; i < a.cols; i++) {
      const scale = a.data[aRow + i];
      if (scale === 0) continue;
      const oRow = i * b.cols;
      for (let j = 0; j < b.cols; j++) {
        out.data[oRow + j] += scale * b.data[bRow + j];
      }
    }
  }
  return out;
}

/** C = A @ B^T where A is (n, p) and B is (m, p). */
export function matmulTransposeB(a: Matrix, b: Matrix): Matrix {
  if (a.cols !== b.cols) {
    throw new Error(`shape mismatch: (${a.rows},${a.cols}) @ (${b.rows},${b.cols})^T`);
  }
  const out = zeros(a.rows, b.rows);
  for (let i = 0; i < a.rows; i++) {
    const aRow = i * a.cols;
    const oRow = i * b.rows;
    for (let j = 0; j < b.rows; j++) {
      const bRow = j * b.cols;
      let acc = 0;
      for (let k = 0; k < a.cols; k++) {
        acc += a.data[aRow + k] * b.data[bRow + k];
      }
      out.data[oRow + j] = acc;
    }
  }
  return out;
}

/** Identity matrix, used as the featureless input. */
export function identity(n: number): Matrix {
  const out = zeros(n, n);
  for (let i = 0; i < n; i++) {
    out.data[i * n + i] = 1;
  }
  return out;
}
