export { TrainingError, linkScore, trainGae } from "./gae.js";
export type { GaeConfig, TrainResult } from "./gae.js";
export {
  ParseError,
  readCovariates,
  readEmbeddings,
  readNetwork,
  writeCovariates,
  writeEmbeddings,
  writeNetwork,
} from "./io.js";
export type { Network } from "./io.js";
export {
  normalizedAdjacency,
  sampleNonEdges,
  splitEdges,
  spmm,
  twoCommunityGraph,
} from "./graph.js";
export type { CommunityGraph, EdgeSplit, SparseMatrix } from "./graph.js";
export { fromRows, identity, matmul, zeros } from "./matrix.js";
export type { Matrix } from "./matrix.js";
export { aucScore, silhouetteScore } from "./metrics.js";
export { Rng } from "./random.js";
