"""Penalized logistic regression with the same pairwise similarity penalty.

Outer loop: quadratic (IRLS) approximation of the negative log-likelihood at
the current estimate, giving working responses z_i and weights w_i.  Inner
loop: weighted coordinate descent on that approximation with the unchanged
penalty.  The intercept is fitted explicitly and never penalized.  Outer
steps are halved whenever the exact penalized objective would increase, so
the recorded objective trace is non-increasing.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import Dataset
from .similarity import PenaltySpec, SimilarityMatrix, penalty_value
from .solver import PathResult, SolverConfig, SolverError, lambda_grid

PROB_CLAMP = 1e-5
_INNER_MAX_SWEEPS = 1000
_MAX_HALVINGS = 10


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LogisticFitResult:
    """Penalized logistic solution with its objective trace per outer step."""

    beta: np.ndarray
    intercept: float
    lam: float
    alpha: float
    neg_loglik_trace: np.ndarray
    outer_iters: int
    converged: bool
    kkt_residual: float
    objective: float
    train_loglik: float
    train_misclassification: float
    class_counts: tuple

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.beta)

    @property
    def model_size(self) -> int:
        return int(np.count_nonzero(self.beta))

    def to_dict(self):
        return {
            "schema_version": 1,
            "kind": "logistic_fit_result",
            "lambda": self.lam,
            "alpha": self.alpha,
            "beta": self.beta.tolist(),
            "intercept": self.intercept,
            "support": self.support.tolist(),
            "model_size": self.model_size,
            "objective": self.objective,
            "sweeps": self.outer_iters,
            "converged": self.converged,
            "kkt_residual": self.kkt_residual,
            "train_loglik": self.train_loglik,
            "train_misclassification": self.train_misclassification,
            "class_counts": list(self.class_counts),
        }


def sigmoid(eta):
    eta = np.asarray(eta, dtype=np.float64)
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _require_classification(dataset: Dataset):
    if dataset.task != "classification":
        raise ValueError(f"expected a classification dataset, got task={dataset.task!r}")


def logistic_objective(beta, intercept, dataset: Dataset,
                       penalty: PenaltySpec) -> float:
    """Mean negative log-likelihood plus the penalty (intercept unpenalized)."""
    _require_classification(dataset)
    beta = np.asarray(beta, dtype=np.float64).reshape(-1)
    if beta.shape[0] != dataset.p:
        raise ValueError(f"beta has length {beta.shape[0]}, expected {dataset.p}")
    eta = intercept + dataset.X @ beta
    nll = float(np.mean(np.logaddexp(0.0, eta) - dataset.y * eta))
    return nll + penalty_value(beta, penalty)


def quadratic_working_response(beta, intercept, dataset: Dataset,
                               clamp=PROB_CLAMP):
    """Working response z and weights w of the IRLS quadratic approximation.

    Probabilities are clamped to [clamp, 1-clamp] before dividing, so the
    weights stay bounded away from zero on separated data.
    """
    _require_classification(dataset)
    eta = intercept + dataset.X @ np.asarray(beta, dtype=np.float64).reshape(-1)
    pbar = np.clip(sigmoid(eta), clamp, 1.0 - clamp)
    w = pbar * (1.0 - pbar)
    z = eta + (dataset.y - pbar) / w
    return z, w


def logistic_kkt(beta, intercept, dataset: Dataset, penalty: PenaltySpec) -> float:
    """Stationarity residual of the exact penalized logistic objective."""
    beta = np.asarray(beta, dtype=np.float64).reshape(-1)
    pbar = sigmoid(intercept + dataset.X @ beta)
    g = dataset.X.T @ (pbar - dataset.y) / dataset.n
    t = penalty.lam * (1.0 + penalty.alpha * penalty.similarity.matvec_abs(beta))
    active = beta != 0.0
    viol = np.maximum(np.abs(g) - t, 0.0)
    viol[active] = np.abs(g[active] + t[active] * np.sign(beta[active]))
    intercept_viol = abs(float(np.mean(pbar - dataset.y)))
    return max(float(viol.max()) if viol.size else 0.0, intercept_viol)


def fit_logistic(dataset: Dataset, penalty: PenaltySpec,
                 config: SolverConfig = SolverConfig(),
                 init_beta=None, init_intercept=None) -> LogisticFitResult:
    """Nested-loop solver: IRLS outside, weighted coordinate descent inside."""
    _require_classification(dataset)
    if not dataset.standardized:
        raise ValueError("fit_logistic requires a standardized dataset")
    R = penalty.similarity
    if not R.is_dense:
        raise ValueError(
            "logistic fitting needs a dense similarity matrix; rebuild it "
            "with a larger dense_threshold"
        )
    n, p = dataset.n, dataset.p
    y = dataset.y
    if init_beta is None:
        beta = np.zeros(p)
    else:
        beta = np.array(init_beta, dtype=np.float64).reshape(-1).copy()
        if beta.shape[0] != p:
            raise ValueError(f"init_beta has length {beta.shape[0]}, expected {p}")
    if init_intercept is None:
        ybar = float(np.clip(y.mean(), PROB_CLAMP, 1.0 - PROB_CLAMP))
        b0 = float(np.log(ybar / (1.0 - ybar)))
    else:
        b0 = float(init_intercept)

    XT = np.ascontiguousarray(dataset.X.T)
    X2 = dataset.X**2
    use_active = config.active_set if config.active_set is not None else p > 1000
    inner_max = min(config.max_sweeps, _INNER_MAX_SWEEPS)
    lam, alpha = penalty.lam, penalty.alpha

    obj = logistic_objective(beta, b0, dataset, penalty)
    trace = [obj]
    outer_used = 0
    converged = False
    for _ in range(config.max_outer):
        z, w = quadratic_working_response(beta, b0, dataset)
        wxx = (w @ X2) / n
        sum_w = float(w.sum())
        cand = beta.copy()
        q = R.matvec_abs(cand) if alpha != 0.0 else np.zeros(p)
        r = z - b0 - dataset.X @ cand
        cand_b0, _, _, _ = _kernels.weighted_fit(
            XT, w, wxx, sum_w, R.matrix, R.diag, lam, alpha, cand, b0, r, q,
            config.tol, inner_max, use_active, True
        )
        if not (np.isfinite(cand).all() and np.isfinite(cand_b0)):
            raise SolverError(f"non-finite values at outer iteration {outer_used + 1}")

        step_b = cand - beta
        step_b0 = cand_b0 - b0
        t = 1.0
        accepted = False
        for _ in range(_MAX_HALVINGS + 1):
            new_beta = beta + t * step_b
            new_b0 = b0 + t * step_b0
            new_obj = logistic_objective(new_beta, new_b0, dataset, penalty)
            if new_obj <= obj + 1e-12:
                accepted = True
                break
            t /= 2.0
        if not accepted:
            break
        delta = max(float(np.abs(new_beta - beta).max()), abs(new_b0 - b0))
        beta, b0, obj = new_beta, new_b0, new_obj
        trace.append(obj)
        outer_used += 1
        if delta < config.tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"logistic solver stopped after {outer_used} outer iterations "
            "without meeting the tolerance",
            ConvergenceWarning,
            stacklevel=2,
        )

    eta = b0 + dataset.X @ beta
    loglik = float(np.mean(y * eta - np.logaddexp(0.0, eta)))
    miscl = float(np.mean((eta > 0.0) != (y == 1.0)))
    n1 = int(y.sum())
    return LogisticFitResult(
        beta=beta,
        intercept=b0,
        lam=lam,
        alpha=alpha,
        neg_loglik_trace=np.asarray(trace),
        outer_iters=outer_used,
        converged=converged,
        kkt_residual=logistic_kkt(beta, b0, dataset, penalty),
        objective=obj,
        train_loglik=loglik,
        train_misclassification=miscl,
        class_counts=(n - n1, n1),
    )


def fit_logistic_path(dataset: Dataset, alpha, similarity: SimilarityMatrix,
                      lambdas=None, config: SolverConfig = SolverConfig(),
                      n_lambdas=100, min_ratio=None) -> PathResult:
    """Descending-lambda logistic fits with warm starts."""
    _require_classification(dataset)
    if lambdas is None:
        lambdas = lambda_grid(dataset, n_lambdas=n_lambdas, min_ratio=min_ratio)
    else:
        lambdas = np.unique(np.asarray(lambdas, dtype=np.float64))[::-1]
        if lambdas.size == 0:
            raise ValueError("empty lambda grid")
    fits = []
    prev_beta = None
    prev_b0 = None
    lasso_prev = None
    lasso_b0 = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        for lam in lambdas:
            if config.init == "lasso":
                ref = fit_logistic(
                    dataset, PenaltySpec(float(lam), 0.0, similarity), config,
                    init_beta=lasso_prev, init_intercept=lasso_b0
                )
                lasso_prev, lasso_b0 = ref.beta, ref.intercept
                start, start_b0 = ref.beta, ref.intercept
            elif config.init == "warm":
                start, start_b0 = prev_beta, prev_b0
            else:
                start, start_b0 = None, None
            result = fit_logistic(
                dataset, PenaltySpec(float(lam), float(alpha), similarity),
                config, init_beta=start, init_intercept=start_b0
            )
            prev_beta, prev_b0 = result.beta, result.intercept
            fits.append(result)
    return PathResult(lambdas=np.asarray(lambdas, dtype=np.float64), fits=fits,
                      alpha=float(alpha))
