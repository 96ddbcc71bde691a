"""Cyclic coordinate descent for the penalized least-squares objective

    (1/2n) ||y - X beta||^2 + lambda (||beta||_1 + alpha/2 |beta|' R |beta|)

on standardized data.  The one-coordinate minimizer is

    beta_j <- S(z_j, lambda (1 + alpha R_{j,-j} |beta_{-j}|)) / (1 + lambda alpha R_jj)

with z_j the partial inner product (1/n) X_j' (y - X_{-j} beta_{-j}) and S the
soft-thresholding operator.  For the absolute and ratio similarity variants
the objective is non-convex; sweeps still decrease it monotonically and the
solver returns a stationary point, which the KKT residual quantifies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import Dataset
from .similarity import PenaltySpec, SimilarityMatrix, penalty_value

INIT_MODES = ("zeros", "warm", "lasso")
ENGINES = ("auto", "gram", "naive", "lazy", "python")

# width at which forming the Gram matrix stops paying off
_GRAM_MAX_P = 2000


class SolverError(RuntimeError):
    """Numerical failure inside the solver (non-finite values)."""


def soft_threshold(z, gamma):
    """sgn(z) * max(|z| - gamma, 0); returns 0 on the tie |z| == gamma."""
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    a = abs(z) - gamma
    if a <= 0.0:
        return 0.0
    return a if z > 0 else -a


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the coordinate-descent loops.

    ``tol`` bounds the largest coefficient move in a full sweep; a fit only
    counts as converged once the KKT residual is also below 10*tol.
    ``init`` selects path initialization: fresh zeros, the previous lambda's
    solution, or a plain-lasso (alpha=0) solution at the same lambda.
    ``active_set`` None means "on when p > 1000".  ``engine`` is normally
    auto-selected; "python" is a slow reference loop kept for cross-checks.
    ``max_outer`` only applies to the logistic solver's outer loop.
    """

    tol: float = 1e-7
    max_sweeps: int = 10000
    init: str = "warm"
    active_set: bool | None = None
    engine: str = "auto"
    max_outer: int = 50
    debug: bool = False

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}, got {self.init!r}")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.max_outer < 1:
            raise ValueError("max_outer must be at least 1")


@dataclass(frozen=True)
class FitResult:
    """Solution of one (lambda, alpha) fit plus convergence diagnostics."""

    beta: np.ndarray
    lam: float
    alpha: float
    objective_trace: np.ndarray
    sweeps_used: int
    converged: bool
    kkt_residual: float
    objective: float

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.beta)

    @property
    def model_size(self) -> int:
        return int(np.count_nonzero(self.beta))

    def to_dict(self):
        return {
            "schema_version": 1,
            "kind": "fit_result",
            "lambda": self.lam,
            "alpha": self.alpha,
            "beta": self.beta.tolist(),
            "support": self.support.tolist(),
            "model_size": self.model_size,
            "objective": self.objective,
            "sweeps": self.sweeps_used,
            "converged": self.converged,
            "kkt_residual": self.kkt_residual,
        }


@dataclass(frozen=True)
class PathResult:
    """Fits along a descending lambda grid at a fixed alpha."""

    lambdas: np.ndarray
    fits: list
    alpha: float

    def coefficients(self) -> np.ndarray:
        return np.vstack([f.beta for f in self.fits])

    def to_dict(self):
        return {
            "schema_version": 1,
            "kind": "path_result",
            "alpha": self.alpha,
            "lambdas": self.lambdas.tolist(),
            "fits": [f.to_dict() for f in self.fits],
        }

    def write_coef_csv(self, fh):
        p = self.fits[0].beta.shape[0]
        fh.write("lambda," + ",".join(f"beta{j + 1}" for j in range(p)) + "\n")
        for lam, f in zip(self.lambdas, self.fits):
            fh.write(repr(float(lam)) + ","
                     + ",".join(repr(float(v)) for v in f.beta) + "\n")


def lambda_max(dataset: Dataset) -> float:
    """Smallest lambda that zeroes every coefficient: ||X'y/n||_inf.

    At beta = 0 the pairwise term contributes nothing to the subgradient, so
    the plain-lasso threshold applies unchanged for any alpha.
    """
    value = float(np.abs(dataset.X.T @ dataset.y).max() / dataset.n)
    if value <= 0.0:
        raise ValueError("response is orthogonal to every column; grid undefined")
    return value


def lambda_grid(dataset: Dataset, n_lambdas=100, min_ratio=None) -> np.ndarray:
    """Log-spaced descending grid from lambda_max down to min_ratio*lambda_max."""
    if min_ratio is None:
        min_ratio = 1e-2 if dataset.p > dataset.n else 1e-3
    if not 0 < min_ratio < 1:
        raise ValueError(f"min_ratio must be in (0, 1), got {min_ratio}")
    top = lambda_max(dataset)
    return np.geomspace(top, top * min_ratio, n_lambdas)


def objective(beta, dataset: Dataset, penalty: PenaltySpec) -> float:
    """(1/2n) ||y - X beta||^2 + penalty."""
    beta = np.asarray(beta, dtype=np.float64).reshape(-1)
    if beta.shape[0] != dataset.p:
        raise ValueError(f"beta has length {beta.shape[0]}, expected {dataset.p}")
    r = dataset.y - dataset.X @ beta
    return float(0.5 * (r @ r) / dataset.n + penalty_value(beta, penalty))


def coordinate_update(j, beta, dataset: Dataset, penalty: PenaltySpec,
                      residual, debug=False):
    """One exact coordinate minimization; mutates beta and residual in place.

    ``residual`` must equal y - X @ beta on entry (checked when debug is on)
    and is updated to match the new beta on exit.  Returns the new beta_j.
    """
    if not 0 <= j < dataset.p:
        raise IndexError(f"coordinate {j} out of range for p={dataset.p}")
    if debug:
        fresh = dataset.y - dataset.X @ beta
        assert np.abs(residual - fresh).max() <= 1e-8, "stale residual cache"
    R = penalty.similarity
    xj = dataset.X[:, j]
    z = float(xj @ residual) / dataset.n + beta[j]
    if penalty.alpha != 0.0:
        row = R.row(j)
        cross = float(row @ np.abs(beta)) - R.diag[j] * abs(beta[j])
    else:
        cross = 0.0
    gamma = penalty.lam * (1.0 + penalty.alpha * cross)
    new = soft_threshold(z, gamma) / (1.0 + penalty.lam * penalty.alpha * R.diag[j])
    if new != beta[j]:
        residual -= (new - beta[j]) * xj
        beta[j] = new
    return new


def check_kkt(beta, dataset: Dataset, penalty: PenaltySpec) -> float:
    """Largest stationarity violation of the subgradient conditions.

    With g = -(1/n) X'(y - X beta) and t_j = lambda (1 + alpha (R|beta|)_j):
    active coordinates contribute |g_j + t_j sgn(beta_j)|, inactive ones
    max(|g_j| - t_j, 0).
    """
    beta = np.asarray(beta, dtype=np.float64).reshape(-1)
    if beta.shape[0] != dataset.p:
        raise ValueError(f"beta has length {beta.shape[0]}, expected {dataset.p}")
    g = -(dataset.X.T @ (dataset.y - dataset.X @ beta)) / dataset.n
    t = penalty.lam * (1.0 + penalty.alpha * penalty.similarity.matvec_abs(beta))
    active = beta != 0.0
    viol = np.maximum(np.abs(g) - t, 0.0)
    viol[active] = np.abs(g[active] + t[active] * np.sign(beta[active]))
    return float(viol.max()) if viol.size else 0.0


def _resolve_engine(config: SolverConfig, dataset: Dataset,
                    similarity: SimilarityMatrix) -> str:
    engine = config.engine
    if engine == "auto":
        if not similarity.is_dense:
            return "lazy"
        return "gram" if dataset.p <= _GRAM_MAX_P else "naive"
    if engine in ("gram", "naive") and not similarity.is_dense:
        raise ValueError(f"{engine} engine needs a dense similarity matrix")
    if engine == "lazy" and similarity.is_dense and similarity.source is None:
        # dense group matrices have no column source to recompute rows from
        if similarity.variant == "group_indicator":
            raise ValueError("lazy engine cannot rebuild group_indicator rows")
    return engine


def _python_sweeps(dataset, penalty, beta, residual, tol, budget, debug):
    """Reference full-sweep loop built on coordinate_update (tests, debug)."""
    trace = []
    sweeps = 0
    last = np.inf
    hit = False
    while sweeps < budget:
        delta = 0.0
        for j in range(dataset.p):
            old = beta[j]
            if debug:
                before = objective(beta, dataset, penalty)
            new = coordinate_update(j, beta, dataset, penalty, residual, debug=debug)
            if debug:
                after = objective(beta, dataset, penalty)
                assert after <= before + 1e-12, "coordinate update increased objective"
            delta = max(delta, abs(new - old))
        trace.append(objective(beta, dataset, penalty))
        sweeps += 1
        last = delta
        if delta < tol:
            hit = True
            break
    return sweeps, last, hit, trace


def fit(dataset: Dataset, penalty: PenaltySpec, config: SolverConfig = SolverConfig(),
        init_beta=None, _gram=None) -> FitResult:
    """Run coordinate descent to a stationary point of the objective.

    Sweeps cycle over all coordinates (optionally narrowing to the active set
    between full sweeps) until the largest per-sweep coefficient change drops
    below ``config.tol``; the fit is declared converged only if the KKT
    residual then sits below 10*tol, else sweeping resumes with a tighter
    internal tolerance while the budget lasts.
    """
    if not dataset.standardized:
        raise ValueError("fit requires a standardized dataset")
    R = penalty.similarity
    if R.p != dataset.p:
        raise ValueError(f"similarity is {R.p}x{R.p} but p={dataset.p}")
    p, n = dataset.p, dataset.n
    if init_beta is None:
        beta = np.zeros(p)
    else:
        beta = np.array(init_beta, dtype=np.float64).reshape(-1).copy()
        if beta.shape[0] != p:
            raise ValueError(f"init_beta has length {beta.shape[0]}, expected {p}")
        if not np.isfinite(beta).all():
            raise ValueError("init_beta contains non-finite values")

    engine = _resolve_engine(config, dataset, R)
    use_active = config.active_set if config.active_set is not None else p > 1000
    lam, alpha = penalty.lam, penalty.alpha

    if engine == "gram":
        if _gram is not None:
            G, c, yty_n = _gram
        else:
            G = dataset.X.T @ dataset.X / n
            c = dataset.X.T @ dataset.y / n
            yty_n = float(dataset.y @ dataset.y) / n
    elif engine in ("naive", "lazy"):
        XT = np.ascontiguousarray(dataset.X.T)

    trace_parts = []
    budget = config.max_sweeps
    total_sweeps = 0
    tol_eff = config.tol
    converged = False
    kkt = None

    for _ in range(8):
        # rebuild caches from scratch so drift never survives a retry
        q = R.matvec_abs(beta) if alpha != 0.0 else np.zeros(p)
        if engine == "python":
            residual = dataset.y - dataset.X @ beta
            sweeps, _, hit, part = _python_sweeps(
                dataset, penalty, beta, residual, tol_eff, budget, config.debug
            )
            part = np.asarray(part)
        else:
            obj_buf = np.empty(budget)
            if engine == "gram":
                u = G @ beta
                sweeps, _, hit = _kernels.gram_fit(
                    G, c, yty_n, R.matrix, R.diag, lam, alpha, beta, u, q,
                    tol_eff, budget, use_active, obj_buf
                )
            elif engine == "naive":
                r = dataset.y - dataset.X @ beta
                sweeps, _, hit = _kernels.naive_fit(
                    XT, R.matrix, R.diag, lam, alpha, beta, r, q,
                    tol_eff, budget, use_active, obj_buf
                )
            else:
                r = dataset.y - dataset.X @ beta
                sweeps, _, hit = _kernels.lazy_fit(
                    XT, R.variant_code, R.clamp, R.diag, lam, alpha, beta, r,
                    q, tol_eff, budget, use_active, obj_buf
                )
            part = obj_buf[:sweeps]
        trace_parts.append(part)
        total_sweeps += sweeps
        budget -= sweeps
        bad = ~np.isfinite(part)
        if not np.isfinite(beta).all() or bad.any():
            at = total_sweeps - sweeps + int(np.argmax(bad)) + 1 if bad.any() else total_sweeps
            raise SolverError(f"non-finite values encountered at sweep {at}")
        if not hit:
            break  # sweep budget exhausted
        kkt = check_kkt(beta, dataset, penalty)
        if kkt <= 10.0 * config.tol:
            converged = True
            break
        if budget <= 0:
            break
        tol_eff /= 10.0

    if kkt is None:
        kkt = check_kkt(beta, dataset, penalty)
    trace = np.concatenate(trace_parts) if trace_parts else np.empty(0)
    return FitResult(
        beta=beta,
        lam=lam,
        alpha=alpha,
        objective_trace=trace,
        sweeps_used=total_sweeps,
        converged=converged,
        kkt_residual=kkt,
        objective=objective(beta, dataset, penalty),
    )


def fit_path(dataset: Dataset, alpha, similarity: SimilarityMatrix,
             lambdas=None, config: SolverConfig = SolverConfig(),
             n_lambdas=100, min_ratio=None) -> PathResult:
    """Fit a descending lambda grid, initializing each fit per config.init."""
    if lambdas is None:
        lambdas = lambda_grid(dataset, n_lambdas=n_lambdas, min_ratio=min_ratio)
    else:
        lambdas = np.unique(np.asarray(lambdas, dtype=np.float64))[::-1]
        if lambdas.size == 0:
            raise ValueError("empty lambda grid")
    gram = None
    if _resolve_engine(config, dataset, similarity) == "gram":
        G = dataset.X.T @ dataset.X / dataset.n
        c = dataset.X.T @ dataset.y / dataset.n
        gram = (G, c, float(dataset.y @ dataset.y) / dataset.n)

    fits = []
    prev = None
    lasso_prev = None
    for lam in lambdas:
        if config.init == "lasso":
            # side chain of plain-lasso solutions, itself warm-started
            ref = fit(dataset, PenaltySpec(float(lam), 0.0, similarity), config,
                      init_beta=lasso_prev, _gram=gram)
            lasso_prev = ref.beta
            start = ref.beta
        elif config.init == "warm":
            start = prev
        else:
            start = None
        result = fit(dataset, PenaltySpec(float(lam), float(alpha), similarity),
                     config, init_beta=start, _gram=gram)
        prev = result.beta
        fits.append(result)
    return PathResult(lambdas=np.asarray(lambdas, dtype=np.float64), fits=fits,
                      alpha=float(alpha))
