import numpy as np
import pytest

from iilasso import Dataset


def standardize_cols(X):
    """Exact population standardization of a raw matrix."""
    X = X - X.mean(axis=0)
    return X / np.sqrt((X**2).mean(axis=0))


def make_regression(seed, n=50, p=20, s=4, noise_sd=0.5, beta_scale=2.0,
                    correlated_with=None):
    """Standardized dataset with y = X beta* + eps holding exactly.

    Returns (dataset, beta_star, eps).  ``correlated_with`` optionally maps
    column j -> (source column, correlation) to plant near-duplicates.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    if correlated_with:
        for j, (src, rho) in correlated_with.items():
            X[:, j] = rho * X[:, src] + np.sqrt(1 - rho**2) * rng.standard_normal(n)
    X = standardize_cols(X)
    beta = np.zeros(p)
    idx = rng.choice(p, size=s, replace=False)
    beta[idx] = beta_scale * rng.standard_normal(s)
    eps = noise_sd * rng.standard_normal(n)
    eps -= eps.mean()
    y = X @ beta + eps
    ds = Dataset.from_standardized(X, y, task="regression")
    return ds, beta, eps


def make_duplicated(seed, n=60, pairs=3, noise_sd=0.3):
    """Design whose columns come in exact duplicate pairs; y uses the first
    member of each pair."""
    rng = np.random.default_rng(seed)
    base = standardize_cols(rng.standard_normal((n, pairs)))
    X = np.empty((n, 2 * pairs))
    X[:, 0::2] = base
    X[:, 1::2] = base
    beta = np.zeros(2 * pairs)
    beta[0::2] = rng.uniform(0.5, 2.0, size=pairs) * rng.choice((-1.0, 1.0), size=pairs)
    eps = noise_sd * rng.standard_normal(n)
    eps -= eps.mean()
    y = X @ beta + eps
    ds = Dataset.from_standardized(X, y, task="regression")
    return ds, beta


def make_orthonormal(seed, n=60, p=8):
    """Centered columns with X'X/n exactly the identity."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, p))
    A -= A.mean(axis=0)
    Q, _ = np.linalg.qr(A)
    return np.sqrt(n) * Q


def make_classification(seed, n=80, p=10, s=3, beta_scale=1.5):
    """Standardized dataset with Bernoulli labels from a sparse logit."""
    rng = np.random.default_rng(seed)
    X = standardize_cols(rng.standard_normal((n, p)))
    beta = np.zeros(p)
    beta[rng.choice(p, size=s, replace=False)] = beta_scale * rng.standard_normal(s)
    eta = X @ beta
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(np.float64)
    if y.min() == y.max():  # force both classes
        y[0] = 1.0 - y[0]
    ds = Dataset.from_standardized(X, y, task="classification")
    return ds, beta


@pytest.fixture
def rng():
    return np.random.default_rng(20240)
