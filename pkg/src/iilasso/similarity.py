"""Similarity matrix R between standardized columns and the penalty it defines.

The regularizer is lambda * (||beta||_1 + alpha/2 * |beta|' R |beta|).  Off
the diagonal R is a nondecreasing function of the absolute column correlation
r_jk = |X_j' X_k| / n, so correlated columns pay to be active together:

    squared          r^2            (positive semidefinite, convex problem)
    absolute         |r|
    ratio            |r| / (1 - |r|), 0 on the diagonal; diverges as |r| -> 1
    group_indicator  1 within a user-supplied group, 0 across groups

The ratio variant clips |r| at 1 - clamp so duplicated columns produce a huge
but finite entry instead of an infinity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset

VARIANTS = ("squared", "absolute", "ratio", "group_indicator")

# kernel-side codes for computing lazy rows
VARIANT_CODES = {"squared": 0, "absolute": 1, "ratio": 2}

DEFAULT_CLAMP = 1e-4
DEFAULT_DENSE_THRESHOLD = 5000


@dataclass(frozen=True)
class GroupPartition:
    """Disjoint groups of column indices covering 0..p-1."""

    groups: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "groups", tuple(tuple(int(j) for j in g) for g in self.groups)
        )
        if any(len(g) == 0 for g in self.groups):
            raise ValueError("empty group in partition")
        flat = [j for g in self.groups for j in g]
        if len(flat) != len(set(flat)):
            raise ValueError("groups overlap")

    @property
    def p(self) -> int:
        return sum(len(g) for g in self.groups)

    def validate_covering(self, p):
        flat = sorted(j for g in self.groups for j in g)
        if flat != list(range(p)):
            raise ValueError(f"groups must cover exactly 0..{p - 1}")

    @classmethod
    def from_labels(cls, labels) -> "GroupPartition":
        labels = np.asarray(labels)
        return cls(
            tuple(
                tuple(np.flatnonzero(labels == lab)) for lab in np.unique(labels)
            )
        )

    @classmethod
    def contiguous_blocks(cls, p, block_size) -> "GroupPartition":
        if p % block_size:
            raise ValueError("p must be a multiple of block_size")
        return cls(
            tuple(
                tuple(range(k * block_size, (k + 1) * block_size))
                for k in range(p // block_size)
            )
        )

    def labels(self) -> np.ndarray:
        out = np.empty(self.p, dtype=np.int64)
        for k, g in enumerate(self.groups):
            out[list(g)] = k
        return out


def _variant_transform(corr, variant, clamp):
    if variant == "squared":
        return corr * corr
    if variant == "absolute":
        return np.abs(corr)
    if variant == "ratio":
        a = np.minimum(np.abs(corr), 1.0 - clamp)
        return a / (1.0 - a)
    raise ValueError(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric nonnegative p x p similarity, dense or computed row-by-row.

    Above a size threshold the correlation-derived variants skip storing the
    dense matrix and recompute rows from the standardized design on demand
    (``matrix`` is None, ``source`` holds X); results are identical.
    """

    variant: str
    clamp: float
    p: int
    diag: np.ndarray
    matrix: np.ndarray | None
    source: np.ndarray | None

    @property
    def is_dense(self) -> bool:
        return self.matrix is not None

    @property
    def variant_code(self) -> int:
        return VARIANT_CODES[self.variant]

    def row(self, j) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix[j]
        x = self.source
        corr = x.T @ x[:, j] / x.shape[0]
        out = _variant_transform(corr, self.variant, self.clamp)
        out[j] = self.diag[j]
        return out

    def matvec_abs(self, beta) -> np.ndarray:
        """R @ |beta|; in row-on-demand mode only support columns are touched."""
        a = np.abs(np.asarray(beta, dtype=np.float64).reshape(-1))
        if a.shape[0] != self.p:
            raise ValueError(f"beta has length {a.shape[0]}, expected {self.p}")
        if self.matrix is not None:
            return self.matrix @ a
        out = np.zeros(self.p)
        for j in np.flatnonzero(a):
            out += self.row(j) * a[j]
        return out

    def submatrix(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if self.matrix is not None:
            return self.matrix[np.ix_(rows, cols)]
        return np.vstack([self.row(j)[cols] for j in rows])

    def toarray(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix.copy()
        return np.vstack([self.row(j) for j in range(self.p)])


def build_similarity(
    dataset: Dataset,
    variant="ratio",
    clamp=DEFAULT_CLAMP,
    partition: GroupPartition | None = None,
    dense_threshold=DEFAULT_DENSE_THRESHOLD,
) -> SimilarityMatrix:
    """Construct R from a standardized dataset.

    ``partition`` is required for (and only for) the group_indicator variant.
    ``dense_threshold`` caps the width at which the full matrix is stored;
    beyond it, correlation-derived rows are recomputed on demand.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if not dataset.standardized:
        raise ValueError("similarity requires a standardized dataset")
    if not 0.0 < clamp < 1.0:
        raise ValueError(f"clamp must be in (0, 1), got {clamp}")
    p = dataset.p

    if variant == "group_indicator":
        if partition is None:
            raise ValueError("group_indicator variant needs a partition")
        partition.validate_covering(p)
        labels = partition.labels()
        R = (labels[:, None] == labels[None, :]).astype(np.float64)
        return SimilarityMatrix(
            variant=variant,
            clamp=clamp,
            p=p,
            diag=np.ones(p),
            matrix=R,
            source=None,
        )
    if partition is not None:
        raise ValueError(f"partition only applies to group_indicator, not {variant}")

    diag_value = 0.0 if variant == "ratio" else 1.0
    diag = np.full(p, diag_value)
    if dense_threshold is not None and p > dense_threshold:
        return SimilarityMatrix(
            variant=variant,
            clamp=clamp,
            p=p,
            diag=diag,
            matrix=None,
            source=dataset.X,
        )

    corr = dataset.X.T @ dataset.X / dataset.n
    corr = (corr + corr.T) / 2.0
    R = _variant_transform(corr, variant, clamp)
    np.fill_diagonal(R, diag_value)
    return SimilarityMatrix(
        variant=variant, clamp=clamp, p=p, diag=diag, matrix=R, source=None
    )


@dataclass(frozen=True)
class PenaltySpec:
    """(lambda, alpha, R) triple defining the regularizer."""

    lam: float
    alpha: float
    similarity: SimilarityMatrix

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")


def penalty_value(beta, penalty: PenaltySpec) -> float:
    """lambda * (||beta||_1 + alpha/2 * |beta|' R |beta|)."""
    beta = np.asarray(beta, dtype=np.float64).reshape(-1)
    if beta.shape[0] != penalty.similarity.p:
        raise ValueError(
            f"beta has length {beta.shape[0]}, expected {penalty.similarity.p}"
        )
    a = np.abs(beta)
    value = a.sum()
    if penalty.alpha != 0.0:
        value += 0.5 * penalty.alpha * float(a @ penalty.similarity.matvec_abs(beta))
    return penalty.lam * value
