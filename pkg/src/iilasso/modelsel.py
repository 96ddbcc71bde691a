"""Held-out evaluation metrics and (lambda, alpha) selection.

Selection scans a full lambda path per alpha value and scores every grid
point on held-out data: mean squared error for regression, mean held-out
log-likelihood for classification.  Cross-validation re-standardizes inside
each training fold and rebuilds the similarity matrix there, so nothing about
the held-out fold leaks into the transform or the penalty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, DataError, GroundTruth, unstandardize_coefficients
from .logistic import LogisticFitResult, fit_logistic_path
from .similarity import GroupPartition, build_similarity
from .solver import SolverConfig, fit_path, lambda_grid

DEFAULT_ALPHA_GRID = (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)


@dataclass(frozen=True)
class Metrics:
    """Held-out metrics; fields not applicable to the task stay None."""

    prediction_error: float | None
    estimation_error: float | None
    model_size: int
    loglik: float | None
    misclassification: float | None

    def to_dict(self):
        return {
            "prediction_error": self.prediction_error,
            "estimation_error": self.estimation_error,
            "model_size": self.model_size,
            "loglik": self.loglik,
            "misclassification": self.misclassification,
        }


@dataclass(frozen=True)
class GridScore:
    """Score of one (alpha, lambda) grid point, aggregated over folds."""

    alpha: float
    lam: float
    mean: float
    se: float | None
    model_size: float

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "lambda": self.lam,
            "mean": self.mean,
            "se": self.se,
            "model_size": self.model_size,
        }


@dataclass(frozen=True)
class SelectionResult:
    best_lambda: float
    best_alpha: float
    grid_scores: list
    refit: object

    def to_dict(self):
        return {
            "schema_version": 1,
            "kind": "selection_result",
            "best_lambda": self.best_lambda,
            "best_alpha": self.best_alpha,
            "grid_scores": [g.to_dict() for g in self.grid_scores],
            "refit": self.refit.to_dict(),
        }

    def write_scores_csv(self, fh):
        fh.write("alpha,lambda,mean,se,model_size\n")
        for g in self.grid_scores:
            se = "" if g.se is None else repr(g.se)
            fh.write(f"{g.alpha!r},{g.lam!r},{g.mean!r},{se},{g.model_size!r}\n")


def evaluate(fit_result, dataset: Dataset, truth: GroundTruth | None = None) -> Metrics:
    """Score a fit on a dataset expressed in the fit's training transform.

    Regression reports the mean squared residual; classification reports mean
    log-likelihood and the 0.5-threshold misclassification rate (ties predict
    class 0).  With ground truth, the raw-scale coefficient error is added.
    """
    est_err = None
    if truth is not None:
        beta_raw, _ = unstandardize_coefficients(fit_result.beta, dataset)
        est_err = float(np.linalg.norm(beta_raw - truth.beta_star))
    if isinstance(fit_result, LogisticFitResult):
        if dataset.task != "classification":
            raise ValueError("logistic fit scored on a non-classification dataset")
        eta = fit_result.intercept + dataset.X @ fit_result.beta
        loglik = float(np.mean(dataset.y * eta - np.logaddexp(0.0, eta)))
        miscl = float(np.mean((eta > 0.0) != (dataset.y == 1.0)))
        return Metrics(
            prediction_error=None,
            estimation_error=est_err,
            model_size=fit_result.model_size,
            loglik=loglik,
            misclassification=miscl,
        )
    if dataset.task != "regression":
        raise ValueError("linear fit scored on a non-regression dataset")
    resid = dataset.y - dataset.X @ fit_result.beta
    return Metrics(
        prediction_error=float(np.mean(resid**2)),
        estimation_error=est_err,
        model_size=fit_result.model_size,
        loglik=None,
        misclassification=None,
    )


def _score_for_selection(metrics: Metrics, task) -> float:
    # lower is better for both: negate loglik for classification
    if task == "classification":
        return -metrics.loglik
    return metrics.prediction_error


def _pick_best(entries):
    """entries: iterable of (score, lam, alpha, payload); deterministic ties."""
    best = None
    for score, lam, alpha, payload in entries:
        if best is None:
            best = (score, lam, alpha, payload)
            continue
        b_score, b_lam, b_alpha, _ = best
        if score < b_score or (
            score == b_score and (lam > b_lam or (lam == b_lam and alpha > b_alpha))
        ):
            best = (score, lam, alpha, payload)
    return best


def _paths_for_grid(train: Dataset, alpha_grid, similarity, lambdas, config):
    if train.task == "classification":
        return {
            alpha: fit_logistic_path(train, alpha, similarity, lambdas=lambdas,
                                     config=config)
            for alpha in alpha_grid
        }
    return {
        alpha: fit_path(train, alpha, similarity, lambdas=lambdas, config=config)
        for alpha in alpha_grid
    }


def select_validation(train: Dataset, valid: Dataset, alpha_grid=DEFAULT_ALPHA_GRID,
                      lambdas=None, similarity_variant="ratio",
                      config: SolverConfig = SolverConfig(), clamp=1e-4,
                      partition: GroupPartition | None = None,
                      n_lambdas=100, min_ratio=None) -> SelectionResult:
    """Tune (lambda, alpha) on a validation set expressed in train's transform."""
    if train.p != valid.p:
        raise ValueError(f"train has p={train.p} but valid has p={valid.p}")
    if train.task != valid.task:
        raise ValueError("train and valid tasks differ")
    if lambdas is None:
        lambdas = lambda_grid(train, n_lambdas=n_lambdas, min_ratio=min_ratio)
    similarity = build_similarity(train, variant=similarity_variant, clamp=clamp,
                                  partition=partition)
    paths = _paths_for_grid(train, alpha_grid, similarity, lambdas, config)

    grid = []
    entries = []
    for alpha in alpha_grid:
        path = paths[alpha]
        for lam, f in zip(path.lambdas, path.fits):
            m = evaluate(f, valid)
            score = _score_for_selection(m, train.task)
            grid.append(GridScore(alpha=float(alpha), lam=float(lam), mean=score,
                                  se=None, model_size=float(f.model_size)))
            entries.append((score, float(lam), float(alpha), f))
    score, lam, alpha, refit = _pick_best(entries)
    return SelectionResult(best_lambda=lam, best_alpha=alpha, grid_scores=grid,
                           refit=refit)


def assign_folds(n, k, seed, labels=None) -> np.ndarray:
    """Deterministic fold ids in 0..k-1; stratified when labels are given."""
    if k < 2:
        raise ValueError("need at least 2 folds")
    if n < k:
        raise ValueError(f"cannot split n={n} into {k} folds")
    folds = np.empty(n, dtype=np.int64)
    if labels is None:
        order = np.random.default_rng([int(seed)]).permutation(n)
        folds[order] = np.arange(n) % k
    else:
        labels = np.asarray(labels)
        for cls in np.unique(labels):
            idx = np.flatnonzero(labels == cls)
            order = np.random.default_rng([int(seed), int(cls)]).permutation(idx.size)
            folds[idx[order]] = np.arange(idx.size) % k
    return folds


def fold_datasets(dataset: Dataset, fold_ids, fold):
    """Standardize the training folds, express the held-out fold in that
    transform.  Works from the raw scale so no fold statistics leak."""
    X_raw, y_raw = dataset.raw()
    hold = fold_ids == fold
    train = Dataset.from_raw(X_raw[~hold], y_raw[~hold], task=dataset.task,
                             standardize=True)
    heldout = train.apply_to(X_raw[hold], y_raw[hold])
    return train, heldout


def cross_validate(dataset: Dataset, k, alpha_grid=DEFAULT_ALPHA_GRID,
                   similarity_variant="ratio",
                   config: SolverConfig = SolverConfig(), seed=0,
                   lambdas=None, clamp=1e-4,
                   partition: GroupPartition | None = None,
                   n_lambdas=100, min_ratio=None) -> SelectionResult:
    """Seeded k-fold tuning; the winning point is refit on the full data.

    The lambda grid is computed once from the full dataset so scores from
    different folds aggregate at identical grid points.  Classification folds
    are stratified by class, and a training fold missing a class is an error.
    """
    labels = dataset.y if dataset.task == "classification" else None
    fold_ids = assign_folds(dataset.n, k, seed, labels=labels)
    if lambdas is None:
        lambdas = lambda_grid(dataset, n_lambdas=n_lambdas, min_ratio=min_ratio)
    alpha_grid = list(alpha_grid)

    n_grid = len(alpha_grid) * len(lambdas)
    scores = np.empty((n_grid, k))
    sizes = np.empty((n_grid, k))
    for fold in range(k):
        train, heldout = fold_datasets(dataset, fold_ids, fold)
        if dataset.task == "classification" and np.unique(train.y).size < 2:
            raise DataError(f"training folds for fold {fold} contain a single class")
        similarity = build_similarity(train, variant=similarity_variant,
                                      clamp=clamp, partition=partition)
        paths = _paths_for_grid(train, alpha_grid, similarity, lambdas, config)
        g = 0
        for alpha in alpha_grid:
            for f in paths[alpha].fits:
                m = evaluate(f, heldout)
                scores[g, fold] = _score_for_selection(m, dataset.task)
                sizes[g, fold] = f.model_size
                g += 1

    means = scores.mean(axis=1)
    ses = scores.std(axis=1, ddof=1) / np.sqrt(k)
    grid = []
    entries = []
    g = 0
    for alpha in alpha_grid:
        for lam in lambdas:
            grid.append(GridScore(alpha=float(alpha), lam=float(lam),
                                  mean=float(means[g]), se=float(ses[g]),
                                  model_size=float(sizes[g].mean())))
            entries.append((float(means[g]), float(lam), float(alpha), None))
            g += 1
    _, best_lam, best_alpha, _ = _pick_best(entries)

    similarity = build_similarity(dataset, variant=similarity_variant,
                                  clamp=clamp, partition=partition)
    if dataset.task == "classification":
        refit_path = fit_logistic_path(dataset, best_alpha, similarity,
                                       lambdas=lambdas, config=config)
    else:
        refit_path = fit_path(dataset, best_alpha, similarity, lambdas=lambdas,
                              config=config)
    at = int(np.argmin(np.abs(refit_path.lambdas - best_lam)))
    refit = refit_path.fits[at]
    return SelectionResult(best_lambda=best_lam, best_alpha=best_alpha,
                           grid_scores=grid, refit=refit)
