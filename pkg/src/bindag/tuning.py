"""Penalty selection by q-fold cross-validation with the one-standard-error rule.

For each node regression, a descending geometric grid of penalties runs from
lambda_max down to lambda_max/1000. lambda_max is the smallest penalty whose
solution has every penalized row zero, obtained from the stationarity
condition at the intercept-only optimum. Fold fits warm-start along the grid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .kernels import KernelConfig, normalized_weights
from .model import _freeze
from .solver import (
    GroupLassoProblem,
    SolverOptions,
    intercept_only_fit,
    loss_and_grad,
    solve,
)


class TuningError(RuntimeError):
    pass


@dataclass(frozen=True)
class LambdaGrid:
    """Descending penalty values with endpoints lam_max and lam_max/1000."""

    values: np.ndarray
    lam_max: float
    lam_min: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 1:
            raise ValueError("grid must be a nonempty vector")
        if np.any(np.diff(vals) > 0):
            raise ValueError("grid must be descending")
        object.__setattr__(self, "values", _freeze(vals))

    @property
    def size(self) -> int:
        return self.values.size


def lambda_max(problem: GroupLassoProblem) -> float:
    """Smallest penalty at which the all-zero (beyond intercept) solution is
    stationary: the largest gradient row norm over penalized rows there."""
    if not problem.penalized_rows:
        return 0.0
    _, grad = loss_and_grad(problem, intercept_only_fit(problem))
    rows = sorted(problem.penalized_rows)
    return float(np.linalg.norm(grad[rows], axis=1).max())


def lambda_grid(problem: GroupLassoProblem, grid_size: int = 20) -> LambdaGrid:
    if grid_size < 2:
        raise ValueError("grid size must be at least 2")
    y = problem.targets
    lam_hi = 0.0 if np.all(y == y[0]) else lambda_max(problem)
    if lam_hi <= 0.0:
        # degenerate regression: nothing to penalize away
        return LambdaGrid(values=np.array([0.0]), lam_max=0.0, lam_min=0.0)
    lam_lo = lam_hi / 1000.0
    vals = np.geomspace(lam_hi, lam_lo, grid_size)
    vals[0], vals[-1] = lam_hi, lam_lo
    return LambdaGrid(values=vals, lam_max=lam_hi, lam_min=lam_lo)


def literal_lambda_max(
    counts: np.ndarray, embeddings: np.ndarray, config: KernelConfig
) -> float:
    """Verbatim transcription of the published grid-endpoint formula, kept for
    comparison. It indexes kernel centers and predictor columns by the same
    letter, so it only types when n >= d_X; the default path uses lambda_max.
    """
    x = np.asarray(counts, dtype=float)
    n, d_x = x.shape
    if n < d_x:
        raise ValueError("literal endpoint needs at least as many samples as nodes")
    # column-normalized kernel weights: entry [i, l] weights sample i around l
    theta = normalized_weights(embeddings, config).T
    centered = x - x.mean(axis=0, keepdims=True)
    # e[j, l] = sum_i theta[i, l] * x[i, l] * centered[i, j], l over nodes
    e = centered.T @ (theta[:, :d_x] * x[:, :d_x])
    return float(np.linalg.norm(e, axis=1).max() / (n - 1))


@dataclass(frozen=True)
class NodeRegression:
    """One node's regression plus what prediction needs: the cluster column
    each sample reads its coefficients from."""

    problem: GroupLassoProblem
    membership: np.ndarray

    def __post_init__(self):
        mem = np.asarray(self.membership, dtype=np.int64)
        if mem.shape != (self.problem.n,):
            raise ValueError("membership must assign every sample")
        if mem.min(initial=0) < 0 or mem.max(initial=0) >= self.problem.m:
            raise ValueError("membership index outside [0, m)")
        object.__setattr__(self, "membership", _freeze(mem))

    def fold_problem(self, train_idx) -> GroupLassoProblem:
        return self.problem.restrict(train_idx)

    def predict(self, coef: np.ndarray, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        u = self.problem.predictors[idx]
        eta = np.einsum("ip,pi->i", u, coef[:, self.membership[idx]])
        return self.problem.trials * expit(eta)

    def mse(self, coef: np.ndarray, indices) -> float:
        idx = np.asarray(indices, dtype=np.int64)
        err = self.problem.targets[idx] - self.predict(coef, idx)
        return float(np.mean(err * err))


@dataclass(frozen=True)
class CvReport:
    lambdas: np.ndarray
    fold_errors: np.ndarray  # (grid, q), NaN where a fold was skipped
    mean_mse: np.ndarray
    se: np.ndarray
    fold_assignment: np.ndarray

    def __post_init__(self):
        for name in ("lambdas", "fold_errors", "mean_mse", "se", "fold_assignment"):
            object.__setattr__(self, name, _freeze(np.asarray(getattr(self, name))))
        if self.fold_errors.shape[0] != self.lambdas.size:
            raise ValueError("fold errors and grid disagree")
        valid = self.fold_errors[~np.isnan(self.fold_errors)]
        if valid.size and valid.min() < 0:
            raise ValueError("fold errors must be nonnegative")


def fold_split(n: int, folds: int, seed: int) -> np.ndarray:
    """Random equal-size partition; the remainder spreads one per fold.
    Returns the fold id of each sample."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if folds > n:
        raise ValueError("more folds than samples")
    perm = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    for k, part in enumerate(np.array_split(perm, folds)):
        assignment[part] = k
    return assignment


def cross_validate(
    regression: NodeRegression,
    folds: int,
    grid: LambdaGrid,
    seed: int,
    solver_options: SolverOptions | None = None,
) -> CvReport:
    n = regression.problem.n
    assignment = fold_split(n, folds, seed)
    errors = np.full((grid.size, folds), np.nan)

    for fold in range(folds):
        test_idx = np.flatnonzero(assignment == fold)
        train_idx = np.flatnonzero(assignment != fold)
        if test_idx.size == 0 or train_idx.size < 2:
            warnings.warn(f"fold {fold} too small to fit; skipped")
            continue
        sub = regression.fold_problem(train_idx)
        coef = None
        for g, lam in enumerate(grid.values):
            coef = solve(sub, float(lam), solver_options, warm_start=coef)
            errors[g, fold] = regression.mse(coef, test_idx)

    if np.all(np.isnan(errors)):
        raise TuningError("every cross-validation fold was skipped")

    mean_mse = np.nanmean(errors, axis=1)
    se = np.zeros(grid.size)
    for g in range(grid.size):
        vals = errors[g][~np.isnan(errors[g])]
        if vals.size >= 2:
            se[g] = np.sqrt(np.var(vals, ddof=1) / vals.size)
    return CvReport(
        lambdas=grid.values,
        fold_errors=errors,
        mean_mse=mean_mse,
        se=se,
        fold_assignment=assignment,
    )


def one_se_select(report: CvReport) -> float:
    """Largest penalty whose mean error stays within one standard error of the
    best mean error; prefers the sparser model on ties."""
    best = int(np.nanargmin(report.mean_mse))
    threshold = report.mean_mse[best] + report.se[best]
    ok = np.flatnonzero(report.mean_mse <= threshold)
    # grid is descending, so the largest qualifying penalty comes first
    return float(report.lambdas[ok[0]])
