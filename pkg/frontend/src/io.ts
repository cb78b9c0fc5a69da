import { readFileSync, renameSync, rmSync, writeFileSync } from "node:fs";
import { dirname, join } from "node:path";

import { Matrix, fromRows } from "./matrix.js";

/** Malformed input file: carries the path and 1-based line number. */
export class ParseError extends Error {
  readonly path: string;
  readonly line: number;

  constructor(path: string, line: number, message: string) {
    super(`${path}:${line}: ${message}`);
    this.name = "ParseError";
    this.path = path;
    this.line = line;
  }
}

function splitLines(text: string): string[] {
  const lines = text.split(/\r?\n/);
  while (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop();
  }
  return lines;
}

function parseFloatStrict(
  path: string,
  line: number,
  token: string,
): number {
  const trimmed = token.trim();
  if (trimmed === "") {
    throw new ParseError(path, line, "empty cell");
  }
  const value = Number(trimmed);
  if (!Number.isFinite(value)) {
    throw new ParseError(path, line, `not a finite number: "${trimmed}"`);
  }
  return value;
}

function readTable(path: string, headerPrefix: string): Matrix {
  const lines = splitLines(readFileSync(path, "utf8"));
  if (lines.length === 0) {
    throw new ParseError(path, 1, "empty file");
  }
  const header = lines[0].split(",");
  const cols = header.length;
  for (let j = 0; j < cols; j++) {
    if (header[j].trim() !== `${headerPrefix}${j + 1}`) {
      throw new ParseError(
        path,
        1,
        `expected header ${headerPrefix}1..${headerPrefix}${cols}`,
      );
    }
  }
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== cols) {
      throw new ParseError(
        path,
        i + 1,
        `expected ${cols} cells, got ${cells.length}`,
      );
    }
    rows.push(cells.map((cell) => parseFloatStrict(path, i + 1, cell)));
  }
  if (rows.length === 0) {
    throw new ParseError(path, 1, "no data rows");
  }
  return fromRows(rows);
}

/** Covariates CSV with a z1..zd header, one row per observation. */
export function readCovariates(path: string): Matrix {
  return readTable(path, "z");
}

/** Embeddings CSV with an h1..hd0 header; used by round-trip tests. */
export function readEmbeddings(path: string): Matrix {
  return readTable(path, "h");
}

export interface Network {
  n: number;
  /** Undirected edges as [u, v] with u < v, deduplicated and sorted. */
  edges: Array<[number, number]>;
}

/** Whitespace-separated edge list, two integer endpoints per line. */
export function readNetwork(path: string, n: number): Network {
  const lines = splitLines(readFileSync(path, "utf8"));
  const seen = new Set<number>();
  const edges: Array<[number, number]> = [];
  for (let i = 0; i < lines.length; i++) {
    const text = lines[i].trim();
    if (text === "") continue;
    const tokens = text.split(/\s+/);
    if (tokens.length !== 2) {
      throw new ParseError(path, i + 1, `expected two node ids, got ${tokens.length}`);
    }
    const u = Number(tokens[0]);
    const v = Number(tokens[1]);
    if (!Number.isInteger(u) || !Number.isInteger(v)) {
      throw new ParseError(path, i + 1, "node ids must be integers");
    }
    if (u < 0 || u >= n || v < 0 || v >= n) {
      throw new ParseError(path, i + 1, `node id outside [0, ${n})`);
    }
    if (u === v) {
      throw new ParseError(path, i + 1, "self-loops are not allowed");
    }
    const lo = Math.min(u, v);
    const hi = Math.max(u, v);
    const key = lo * n + hi;
    if (!seen.has(key)) {
      seen.add(key);
      edges.push([lo, hi]);
    }
  }
  edges.sort((a, b) => (a[0] - b[0]) || (a[1] - b[1]));
  return { n, edges };
}

function writeAtomic(path: string, text: string): void {
  const tmp = join(
    dirname(path),
    `.${Math.random().toString(36).slice(2)}.tmp`,
  );
  try {
    writeFileSync(tmp, text);
    renameSync(tmp, path);
  } catch (err) {
    rmSync(tmp, { force: true });
    throw err;
  }
}

/** Embeddings CSV with the h1..hd0 header consumed by the learner. */
export function writeEmbeddings(path: string, embeddings: Matrix): void {
  const { rows, cols, data } = embeddings;
  for (let i = 0; i < data.length; i++) {
    if (!Number.isFinite(data[i])) {
      throw new Error("embeddings must be finite");
    }
  }
  const header = Array.from({ length: cols }, (_, j) => `h${j + 1}`);
  const lines = [header.join(",")];
  for (let i = 0; i < rows; i++) {
    const cells: string[] = [];
    for (let j = 0; j < cols; j++) {
      cells.push(String(data[i * cols + j]));
    }
    lines.push(cells.join(","));
  }
  writeAtomic(path, lines.join("\n") + "\n");
}

/** Edge list in the learner's network format, sorted "u v" lines. */
export function writeNetwork(path: string, network: Network): void {
  const sorted = [...network.edges].sort(
    (a, b) => (a[0] - b[0]) || (a[1] - b[1]),
  );
  const lines = sorted.map(([u, v]) => `${u} ${v}`);
  writeAtomic(path, lines.join("\n") + (lines.length > 0 ? "\n" : ""));
}

/** Covariates CSV with the z1..zd header. */
export function writeCovariates(path: string, covariates: Matrix): void {
  const { rows, cols, data } = covariates;
  const header = Array.from({ length: cols }, (_, j) => `z${j + 1}`);
  const lines = [header.join(",")];
  for (let i = 0; i < rows; i++) {
    const cells: string[] = [];
    for (let j = 0; j < cols; j++) {
      cells.push(String(data[i * cols + j]));
    }
    lines.push(cells.join(","));
  }
  writeAtomic(path, lines.join("\n") + "\n");
}
