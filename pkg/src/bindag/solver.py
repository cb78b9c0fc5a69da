"""Weighted Binomial negative log-likelihood with a row-wise group penalty.

One problem instance regresses a count column on a predictor matrix whose
first column is the intercept. Coefficients form a (p, m) table with one
column per embedding cluster; the penalty sums the Euclidean norms of the
non-intercept rows, so a predictor is dropped or kept jointly across all
clusters. Solved by monotone FISTA with backtracking.

The smooth part, for coefficients B and cluster weights alpha, is

    l(B) = (1/m) sum_m sum_i alpha[m, i] * ((T - y_i) * eta
                                            + T * log(1 + exp(-eta))),
    eta = <B[:, m], u_i>,

whose per-sample gradient contribution is (T * sigmoid(eta) - y_i) * u_i.

Predictor rows are small integer vectors, so distinct samples frequently
share a row. The loss touches eta only through u_i, which lets identical
rows collapse: with group masses a[g, m] = sum alpha[m, i] and responses
w[g, m] = sum alpha[m, i] * y_i over the samples i sharing row g, the loss
is sum_g (T a - w) eta_g + T a softplus(-eta_g) and the gradient column is
U_g' (T a sigmoid(eta_g) - w). All per-iteration work then scales with the
number of distinct rows instead of n. The collapse is exact, not an
approximation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expit, log_expit

from .kernels import ClusterWeights
from .model import _freeze


class ConvergenceError(RuntimeError):
    """Solver ran out of iterations; carries the last iterate and KKT residual."""

    def __init__(self, message, coefficients, residual):
        super().__init__(message)
        self.coefficients = coefficients
        self.residual = residual


@dataclass(frozen=True)
class GroupLassoProblem:
    """Targets in 0..trials, predictors with a leading intercept column."""

    targets: np.ndarray
    predictors: np.ndarray
    trials: int
    cluster_weights: ClusterWeights
    penalized_rows: frozenset[int]

    def __post_init__(self):
        y = np.asarray(self.targets)
        u = np.atleast_2d(np.asarray(self.predictors, dtype=float))
        if y.ndim != 1 or y.shape[0] != u.shape[0]:
            raise ValueError("targets and predictors disagree on sample count")
        if y.min(initial=0) < 0 or y.max(initial=0) > self.trials:
            raise ValueError(f"targets must lie in [0, {self.trials}]")
        if self.cluster_weights.n != u.shape[0]:
            raise ValueError("cluster weights and predictors disagree on n")
        rows = frozenset(int(r) for r in self.penalized_rows)
        if rows and (min(rows) < 0 or max(rows) >= u.shape[1]):
            raise ValueError("penalized rows outside [0, p)")
        object.__setattr__(self, "targets", _freeze(y.astype(float)))
        object.__setattr__(self, "predictors", _freeze(u))
        object.__setattr__(self, "penalized_rows", rows)
        self._build_groups()

    def _build_groups(self):
        u, y = self.predictors, self.targets
        unique, inverse = np.unique(u, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        g = unique.shape[0]
        alpha = self.cluster_weights.alpha
        m = alpha.shape[0]
        mass = np.empty((g, m))
        resp = np.empty((g, m))
        for col in range(m):
            mass[:, col] = np.bincount(inverse, weights=alpha[col], minlength=g)
            resp[:, col] = np.bincount(inverse, weights=alpha[col] * y, minlength=g)
        object.__setattr__(self, "_unique_rows", _freeze(unique))
        object.__setattr__(self, "_group_mass", _freeze(mass))
        object.__setattr__(self, "_group_resp", _freeze(resp))
        t = self.trials
        object.__setattr__(self, "_lin_coef", _freeze(t * mass - resp))
        object.__setattr__(self, "_mass_t", _freeze(t * mass))
        pen = np.asarray(sorted(self.penalized_rows), dtype=np.int64)
        object.__setattr__(self, "_pen_idx", _freeze(pen))

    @property
    def n(self) -> int:
        return self.predictors.shape[0]

    @property
    def p(self) -> int:
        return self.predictors.shape[1]

    @property
    def m(self) -> int:
        return self.cluster_weights.m

    def penalty_mask(self) -> np.ndarray:
        mask = np.zeros(self.p, dtype=bool)
        mask[list(self.penalized_rows)] = True
        return mask

    def restrict(self, indices) -> "GroupLassoProblem":
        """Sub-problem on a sample subset; cluster weight rows renormalize."""
        idx = np.asarray(indices, dtype=np.int64)
        alpha = self.cluster_weights.alpha[:, idx]
        return GroupLassoProblem(
            targets=self.targets[idx].astype(int),
            predictors=self.predictors[idx],
            trials=self.trials,
            cluster_weights=ClusterWeights(alpha / alpha.sum(axis=1, keepdims=True)),
            penalized_rows=self.penalized_rows,
        )


def intercept_only_fit(problem: GroupLassoProblem) -> np.ndarray:
    """Closed-form optimum when all penalized rows are forced to zero:
    per cluster, sigmoid(intercept) matches the weighted mean rate."""
    alpha = problem.cluster_weights.alpha
    rate = (alpha @ problem.targets) / problem.trials
    rate = np.clip(rate, 1e-10, 1.0 - 1e-10)
    coef = np.zeros((problem.p, problem.m))
    coef[0] = np.log(rate) - np.log1p(-rate)
    return coef


def _default_start(problem: GroupLassoProblem) -> np.ndarray:
    # with the usual intercept-plus-penalized-rows layout, starting at the
    # intercept-only optimum makes lam >= lambda_max solutions exactly sparse
    if problem.penalized_rows == frozenset(range(1, problem.p)):
        return intercept_only_fit(problem)
    return np.zeros((problem.p, problem.m))


def _smooth_loss_eta(problem: GroupLassoProblem, eta: np.ndarray) -> float:
    """Smooth loss from the (groups, m) linear predictor table."""
    # T*log(1+exp(-eta)) = -T*log_expit(eta), stable in both tails; the sums
    # collapse to two dot products over the flattened tables
    lin = problem._lin_coef.ravel() @ eta.ravel()
    soft = problem._mass_t.ravel() @ log_expit(eta).ravel()
    return float((lin - soft) / problem.m)


def _grad_eta(problem: GroupLassoProblem, eta: np.ndarray) -> np.ndarray:
    resid = expit(eta)
    resid *= problem._mass_t
    resid -= problem._group_resp
    return problem._unique_rows.T @ resid / problem.m


def loss_and_grad(
    problem: GroupLassoProblem, coef: np.ndarray
) -> tuple[float, np.ndarray]:
    """Smooth loss and its exact gradient at the (p, m) coefficient table."""
    eta = problem._unique_rows @ coef
    return _smooth_loss_eta(problem, eta), _grad_eta(problem, eta)


def prox_group_rows(coef, step: float, lam: float, penalized_rows) -> np.ndarray:
    """Block soft-threshold: each penalized row shrinks by factor
    max(0, 1 - step*lam/||row||), vanishing entirely at the threshold."""
    out = np.array(coef, dtype=float)
    if lam == 0:
        return out
    rows = np.asarray(sorted(penalized_rows), dtype=np.int64)
    if rows.size == 0:
        return out
    norms = np.linalg.norm(out[rows], axis=1)
    scale = np.zeros_like(norms)
    nz = norms > 0
    scale[nz] = np.maximum(0.0, 1.0 - step * lam / norms[nz])
    out[rows] = out[rows] * scale[:, None]
    return out


def penalty_value(coef, lam: float, penalized_rows) -> float:
    rows = sorted(penalized_rows)
    if not rows or lam == 0:
        return 0.0
    return float(lam * np.linalg.norm(coef[rows], axis=1).sum())


def kkt_residual(problem: GroupLassoProblem, coef: np.ndarray, lam: float) -> float:
    """Max stationarity violation over rows.

    Unpenalized rows: ||grad_row||. Zero penalized rows: excess of ||grad_row||
    over lam. Nonzero penalized rows: ||grad_row + lam * row/||row||||.
    """
    _, grad = loss_and_grad(problem, coef)
    return _kkt_from_grad(problem, coef, grad, lam)


def _kkt_from_grad(problem, coef, grad, lam) -> float:
    pen = problem._pen_idx
    mask = np.zeros(problem.p, dtype=bool)
    mask[pen] = True
    worst = 0.0
    if not mask.all():
        worst = float(np.linalg.norm(grad[~mask], axis=1).max())
    if pen.size == 0:
        return worst
    coef_norms = np.linalg.norm(coef[pen], axis=1)
    grad_norms = np.linalg.norm(grad[pen], axis=1)
    zero = coef_norms == 0
    if zero.any():
        worst = max(worst, float(np.maximum(grad_norms[zero] - lam, 0.0).max()))
    nz = ~zero
    if nz.any():
        rows = pen[nz]
        shifted = grad[rows] + lam * coef[rows] / coef_norms[nz, None]
        worst = max(worst, float(np.linalg.norm(shifted, axis=1).max()))
    return worst


@dataclass
class SolverOptions:
    max_iter: int = 5000
    rel_tol: float = 1e-8
    kkt_tol: float = 1e-4
    init_step: float = 1.0
    kkt_interval: int = 10
    callback: Callable[[float], None] | None = field(default=None, repr=False)


def solve(
    problem: GroupLassoProblem,
    lam: float,
    opts: SolverOptions | None = None,
    warm_start: np.ndarray | None = None,
) -> np.ndarray:
    """Minimize smooth loss + lam * sum of penalized row norms.

    Monotone FISTA: the accepted iterate is the proximal candidate only when
    it does not increase the objective, so the objective sequence is
    non-increasing. Backtracking halves the step whenever the local quadratic
    upper bound fails; the step is allowed to drift back up between
    iterations, capped at the initial step. Returns once the objective has
    stabilized (relative change below rel_tol) and the KKT residual is within
    kkt_tol; raises ConvergenceError with the last iterate otherwise.
    """
    if lam < 0:
        raise ValueError("penalty must be nonnegative")
    opts = opts or SolverOptions()
    ug = problem._unique_rows
    rows = problem.penalized_rows
    pen = problem._pen_idx
    m = problem.m

    if warm_start is None:
        x = _default_start(problem)
    else:
        x = np.array(warm_start, dtype=float)
        if x.shape != (problem.p, m):
            raise ValueError(f"warm start shape {x.shape} != {(problem.p, m)}")
    x = prox_group_rows(x, 1.0, lam, rows)  # start feasible for exact-zero rows

    f_x = _smooth_loss_eta(problem, ug @ x) + penalty_value(x, lam, rows)
    if opts.callback is not None:
        opts.callback(f_x)
    momentum = x
    t_k = 1.0
    step = opts.init_step

    for it in range(1, opts.max_iter + 1):
        eta = ug @ momentum
        loss_mom = _smooth_loss_eta(problem, eta)
        grad = _grad_eta(problem, eta)

        step = min(opts.init_step, step * 2.0)
        while True:
            z = momentum - step * grad
            if lam > 0 and pen.size:
                # block soft-threshold; shrunk row norms are (norm-step*lam)+
                norms = np.linalg.norm(z[pen], axis=1)
                shrunk = np.maximum(norms - step * lam, 0.0)
                scale = np.divide(
                    shrunk, norms, out=np.zeros_like(norms), where=norms > 0
                )
                z[pen] *= scale[:, None]
                pen_z = float(lam * shrunk.sum())
            else:
                pen_z = 0.0
            diff = z - momentum
            quad = loss_mom + float((grad * diff).sum()) + float(
                (diff * diff).sum()
            ) / (2 * step)
            loss_z = _smooth_loss_eta(problem, ug @ z)
            if loss_z <= quad + 1e-12 * max(1.0, abs(quad)):
                break
            step *= 0.5
            if step < 1e-18:
                raise ConvergenceError(
                    "backtracking step underflow",
                    x,
                    kkt_residual(problem, x, lam),
                )
        f_z = loss_z + pen_z

        x_prev, f_prev = x, f_x
        if f_z <= f_x:  # monotone acceptance
            x, f_x = z, f_z
            t_next = (1.0 + np.sqrt(1.0 + 4.0 * t_k * t_k)) / 2.0
            momentum = (
                x
                + (t_k / t_next) * (z - x)
                + ((t_k - 1.0) / t_next) * (x - x_prev)
            )
            t_k = t_next
        else:
            # candidate went uphill: restart momentum at the incumbent
            momentum = x
            t_k = 1.0
        if opts.callback is not None:
            opts.callback(f_x)

        stalled = abs(f_prev - f_x) <= opts.rel_tol * max(1.0, abs(f_prev))
        if stalled or it % opts.kkt_interval == 0:
            if kkt_residual(problem, x, lam) <= opts.kkt_tol:
                return x

    raise ConvergenceError(
        f"no convergence in {opts.max_iter} iterations "
        f"(KKT residual {kkt_residual(problem, x, lam):.3g})",
        x,
        kkt_residual(problem, x, lam),
    )
