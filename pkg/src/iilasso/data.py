"""Dataset container, standardization, CSV ingestion and the correlated-block
synthetic generator.

The standardization convention is the population one: every retained column
satisfies sum(x) == 0 and sum(x**2)/n == 1 after the transform, and the
regression response is centered (classification labels are left untouched).
Means and scales are stored on the Dataset so coefficients can be mapped back
to the raw scale.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

TASKS = ("regression", "classification")

# A column is treated as constant when its scale is this small relative to
# its magnitude; exact float cancellation noise sits many orders below this.
_ZERO_VAR_RTOL = 1e-12


class DataError(ValueError):
    """Malformed or degenerate input data."""


def _as_float_matrix(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"design matrix must be 2-D, got shape {X.shape}")
    return X


def _check_labels(y):
    if not np.isin(y, (0.0, 1.0)).all():
        bad = y[~np.isin(y, (0.0, 1.0))][0]
        raise DataError(f"classification target must be 0/1, found {bad!r}")


@dataclass(frozen=True)
class Dataset:
    """Immutable design/response pair with its standardization factors.

    ``X`` is n x p, ``y`` has length n.  When ``standardized`` is true the
    columns of X are centered and scaled to unit population norm and, for the
    regression task, y is centered; ``col_means``/``col_scales``/``y_mean``
    hold the factors that were applied (identity factors otherwise).
    """

    X: np.ndarray
    y: np.ndarray
    col_means: np.ndarray
    col_scales: np.ndarray
    y_mean: float
    task: str
    standardized: bool

    def __post_init__(self):
        if self.task not in TASKS:
            raise DataError(f"unknown task {self.task!r}")
        n, p = self.X.shape
        # n >= 2 is enforced where factors are fitted (from_raw); transformed
        # held-out slices may be as short as a single row
        if n < 1 or p < 1:
            raise DataError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
        if self.y.shape != (n,):
            raise DataError(f"y has shape {self.y.shape}, expected ({n},)")
        if self.col_means.shape != (p,) or self.col_scales.shape != (p,):
            raise DataError("standardization factors must have length p")
        if self.task == "classification":
            _check_labels(self.y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @classmethod
    def from_raw(cls, X, y, task="regression", standardize=True) -> "Dataset":
        """Build a Dataset from raw arrays, fitting the transform here."""
        X = _as_float_matrix(X)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        n, p = X.shape
        if n < 2:
            raise DataError(f"need at least 2 rows to fit a transform, got {n}")
        if y.shape[0] != n:
            raise DataError(f"X has {n} rows but y has {y.shape[0]}")

        means = X.mean(axis=0)
        centered = X - means
        scales = np.sqrt(np.mean(centered**2, axis=0))
        dead = scales <= _ZERO_VAR_RTOL * np.maximum(1.0, np.abs(means))
        if dead.any():
            raise DataError(
                "zero-variance column(s) at index "
                + ", ".join(str(j) for j in np.flatnonzero(dead))
            )

        if not standardize:
            return cls(
                X=X.copy(),
                y=y.copy(),
                col_means=np.zeros(p),
                col_scales=np.ones(p),
                y_mean=0.0,
                task=task,
                standardized=False,
            )

        Xs = centered / scales
        if task == "regression":
            y_mean = float(y.mean())
            ys = y - y_mean
        else:
            y_mean = 0.0
            ys = y.copy()
        return cls(
            X=Xs,
            y=ys,
            col_means=means,
            col_scales=scales,
            y_mean=y_mean,
            task=task,
            standardized=True,
        )

    @classmethod
    def from_standardized(cls, X, y, task="regression", atol=1e-8) -> "Dataset":
        """Wrap arrays that are already in standardized form.

        Used when an instance is constructed analytically (tests, theory
        checks) so that y = X @ beta + noise holds exactly as given.  The
        standardization invariants are verified to ``atol``.
        """
        X = _as_float_matrix(X)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        n, p = X.shape
        if np.abs(X.mean(axis=0)).max() > atol:
            raise DataError("columns are not centered")
        if np.abs(np.mean(X**2, axis=0) - 1.0).max() > atol:
            raise DataError("columns do not have unit population norm")
        if task == "regression" and abs(y.mean()) > atol * max(1.0, np.abs(y).max()):
            raise DataError("regression response is not centered")
        return cls(
            X=X.copy(),
            y=y.copy(),
            col_means=np.zeros(p),
            col_scales=np.ones(p),
            y_mean=0.0,
            task=task,
            standardized=True,
        )

    def apply_to(self, X_raw, y_raw) -> "Dataset":
        """Express new raw data in *this* dataset's standardization.

        This is the transform used for validation/test/held-out folds: means
        and scales come from the data this Dataset was fitted on, so no
        information leaks from the new data.
        """
        X_raw = _as_float_matrix(X_raw)
        y_raw = np.asarray(y_raw, dtype=np.float64).reshape(-1)
        if X_raw.shape[1] != self.p:
            raise DataError(f"expected {self.p} columns, got {X_raw.shape[1]}")
        if not self.standardized:
            raise DataError("apply_to requires a standardized source dataset")
        Xs = (X_raw - self.col_means) / self.col_scales
        ys = y_raw - self.y_mean if self.task == "regression" else y_raw.copy()
        return Dataset(
            X=Xs,
            y=ys,
            col_means=self.col_means,
            col_scales=self.col_scales,
            y_mean=self.y_mean,
            task=self.task,
            standardized=True,
        )

    def raw(self):
        """Invert the stored transform, returning (X_raw, y_raw)."""
        X_raw = self.X * self.col_scales + self.col_means
        y_raw = self.y + self.y_mean if self.task == "regression" else self.y.copy()
        return X_raw, y_raw


@dataclass(frozen=True)
class SyntheticSpec:
    """Block-equicorrelated Gaussian design with sparse block-lead signal.

    The design covariance is block diagonal with ``b`` blocks of size ``q``
    (unit diagonal, ``rho`` off-diagonal); the response places ``coef[l]`` on
    the first column of block l and adds N(0, noise_sd^2) noise.
    """

    n: int
    p: int
    b: int
    q: int
    rho: float
    coef: tuple
    noise_sd: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "coef", tuple(float(c) for c in self.coef))
        if self.p != self.b * self.q:
            raise DataError(f"p={self.p} must equal b*q={self.b * self.q}")
        if not 0.0 <= self.rho < 1.0:
            raise DataError(f"rho must be in [0, 1), got {self.rho}")
        if self.noise_sd < 0:
            raise DataError("noise_sd must be nonnegative")
        if len(self.coef) != self.b:
            raise DataError(f"need one coefficient per block: {self.b}")
        if self.n < 2:
            raise DataError("need n >= 2")
        if self.seed < 0:
            raise DataError("seed must be a nonnegative integer")

    @classmethod
    def paper_defaults(cls, seed=0) -> "SyntheticSpec":
        """n=50, p=100, ten blocks of ten at rho=0.95, decaying signed signal."""
        return cls(
            n=50,
            p=100,
            b=10,
            q=10,
            rho=0.95,
            coef=(10, -9, 8, -7, 6, -5, 4, -3, 2, -1),
            noise_sd=1.0,
            seed=seed,
        )

    @classmethod
    def from_dict(cls, d) -> "SyntheticSpec":
        keys = {"n", "p", "b", "q", "rho", "coef", "noise_sd", "seed"}
        extra = set(d) - keys
        if extra:
            raise DataError(f"unknown synthetic spec fields: {sorted(extra)}")
        missing = keys - set(d)
        if missing:
            raise DataError(f"missing synthetic spec fields: {sorted(missing)}")
        return cls(
            n=int(d["n"]),
            p=int(d["p"]),
            b=int(d["b"]),
            q=int(d["q"]),
            rho=float(d["rho"]),
            coef=tuple(d["coef"]),
            noise_sd=float(d["noise_sd"]),
            seed=int(d["seed"]),
        )

    def to_dict(self):
        return {
            "n": self.n,
            "p": self.p,
            "b": self.b,
            "q": self.q,
            "rho": self.rho,
            "coef": list(self.coef),
            "noise_sd": self.noise_sd,
            "seed": self.seed,
        }

    def beta_star(self) -> np.ndarray:
        beta = np.zeros(self.p)
        beta[np.arange(self.b) * self.q] = self.coef
        return beta


@dataclass(frozen=True)
class GroundTruth:
    """True coefficient vector with its support (0-based indices)."""

    beta_star: np.ndarray
    support: np.ndarray
    s: int

    @classmethod
    def from_beta(cls, beta_star) -> "GroundTruth":
        beta_star = np.asarray(beta_star, dtype=np.float64)
        support = np.flatnonzero(beta_star)
        return cls(beta_star=beta_star, support=support, s=int(support.size))

    def to_dict(self):
        return {
            "schema_version": 1,
            "kind": "ground_truth",
            "beta_star": self.beta_star.tolist(),
            "support": self.support.tolist(),
            "s": self.s,
        }


def sample_synthetic_raw(spec: SyntheticSpec, rng=None):
    """Draw one raw (X, y, noise) triple from the spec's distribution.

    Column order is deterministic for a given generator state: the full
    standard-normal matrix is drawn in one call, then each block is rotated by
    the Cholesky factor of its q x q equicorrelation matrix.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    Z = rng.standard_normal((spec.n, spec.p))
    if spec.rho > 0.0:
        block_cov = np.full((spec.q, spec.q), spec.rho)
        np.fill_diagonal(block_cov, 1.0)
        L = np.linalg.cholesky(block_cov)
        X = np.empty_like(Z)
        for l in range(spec.b):
            cols = slice(l * spec.q, (l + 1) * spec.q)
            X[:, cols] = Z[:, cols] @ L.T
    else:
        X = Z
    eps = spec.noise_sd * rng.standard_normal(spec.n)
    y = X @ spec.beta_star() + eps
    return X, y, eps


def generate_synthetic(spec: SyntheticSpec):
    """Sample per the spec and return (standardized Dataset, GroundTruth).

    The sampled matrix is re-standardized empirically, so columns have exactly
    unit population norm rather than merely unit variance in expectation.
    """
    X, y, _ = sample_synthetic_raw(spec)
    dataset = Dataset.from_raw(X, y, task="regression", standardize=True)
    truth = GroundTruth.from_beta(spec.beta_star())
    return dataset, truth


def unstandardize_coefficients(beta, dataset: Dataset):
    """Map standardized-scale coefficients back to the raw data scale.

    Returns (beta_raw, intercept_raw) such that
    ``intercept_raw + X_raw @ beta_raw`` equals the standardized-scale
    prediction ``y_mean + X_std @ beta`` on any input.  For classification the
    returned intercept is only the centering shift; add the model's own
    intercept on top.
    """
    beta = np.asarray(beta, dtype=np.float64).reshape(-1)
    if beta.shape[0] != dataset.p:
        raise DataError(f"beta has length {beta.shape[0]}, expected {dataset.p}")
    beta_raw = beta / dataset.col_scales
    intercept_raw = dataset.y_mean - float(beta_raw @ dataset.col_means)
    return beta_raw, intercept_raw


def load_csv(path, target, task="regression", standardize=True) -> Dataset:
    """Load a numeric CSV with a header row into a Dataset.

    The target column becomes y, all other columns the design matrix.  Cells
    must parse as floats; the first offending cell is reported with its
    1-based row number and column name.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        if target not in header:
            raise DataError(f"target column {target!r} not in header {header}")
        t_idx = header.index(target)
        rows = []
        for r, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"row {r} has {len(row)} cells, expected {len(header)}")
            vals = []
            for c, cell in enumerate(row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"non-numeric cell at row {r}, column {header[c]!r}: {cell!r}"
                    ) from None
            rows.append(vals)
    if len(rows) < 2:
        raise DataError(f"{path} has {len(rows)} data rows, need at least 2")
    data = np.asarray(rows, dtype=np.float64)
    y = data[:, t_idx]
    X = np.delete(data, t_idx, axis=1)
    feature_names = [h for i, h in enumerate(header) if i != t_idx]
    if task == "classification":
        _check_labels(y)
    try:
        return Dataset.from_raw(X, y, task=task, standardize=standardize)
    except DataError as exc:
        msg = str(exc)
        if msg.startswith("zero-variance"):
            idx = [int(s) for s in msg.split("index ")[1].split(", ")]
            names = ", ".join(repr(feature_names[j]) for j in idx)
            raise DataError(f"zero-variance column(s): {names}") from None
        raise


def write_csv(path, dataset: Dataset, target="y", feature_prefix="x"):
    """Write a Dataset's current (possibly standardized) values as CSV."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"{feature_prefix}{j + 1}" for j in range(dataset.p)] + [target])
        for i in range(dataset.n):
            writer.writerow(
                [repr(float(v)) for v in dataset.X[i]] + [repr(float(dataset.y[i]))]
            )
