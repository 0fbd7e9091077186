"""Pseudo-observations and moment vectors.

The empirical CDF is the plain indicator average ``F(x) = #{X_i <= x} / n``,
so pseudo-observations are ``rank / n`` and reach 1 exactly; tied values
share the largest rank of their group.
"""
import numpy as np
from scipy.stats import rankdata
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_samples
from .exceptions import DimensionError, DomainError, EvaluationError
from .quadrature import QuadratureRule, default_grading

__all__ = [
    "EmpiricalCDF",
    "ecdf_column",
    "pseudo_observations",
    "moment_vector",
    "population_moments",
]


def ecdf_column(column, x):
    """Empirical CDF of ``column`` evaluated at ``x`` (scalar or array)."""
    column = np.sort(np.asarray(column, dtype=np.float64).ravel())
    if column.size == 0:
        raise DomainError("empirical CDF of an empty column is undefined")
    value = np.searchsorted(column, x, side="right") / column.size
    return float(value) if np.ndim(value) == 0 else value


def pseudo_observations(X):
    """Apply each column's empirical CDF to its own entries.

    Parameters
    ----------
    X : array-like of shape (n_samples, n_features)

    Returns
    -------
    U : ndarray of shape (n_samples, n_features)
        Entries in ``{1/n, ..., 1}``.
    """
    X = check_samples(X, min_features=1)
    return rankdata(X, method="max", axis=0) / X.shape[0]


def moment_vector(pseudo, basis):
    """Sample averages ``(1/n) sum_j B_t(u_j)`` for every basis function ``t``."""
    pseudo = np.asarray(pseudo, dtype=np.float64)
    if pseudo.ndim != 2 or pseudo.shape[1] != basis.dims:
        raise DimensionError("pseudo-observations must have %d columns, got shape %s"
                             % (basis.dims, pseudo.shape))
    if pseudo.shape[0] == 0:
        raise DomainError("need at least one observation")
    return basis.basis_sums(pseudo) / pseudo.shape[0]


def population_moments(density, basis, quadrature=None):
    """Moments ``integral c(u) B_t(u) du`` of a density by tensor quadrature.

    Parameters
    ----------
    density : callable
        Vectorized density, ``(N, d) -> (N,)``.
    basis : TensorBasis
    quadrature : QuadratureRule, optional
        Defaults to 5 Gauss-Legendre nodes per knot cell, with boundary
        grading when ``density`` is a copula with a singular boundary.
    """
    if quadrature is None:
        singular = getattr(density, "singular_boundary", False)
        grading = default_grading(basis.dims) if singular else 0
        quadrature = QuadratureRule.for_grid(basis.grid, order=5, grading=grading)
    if quadrature.dims != basis.dims:
        raise DimensionError("quadrature rule and basis differ in dimension")
    points, weights = quadrature.nodes()
    values = np.asarray(density(points), dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise EvaluationError("density returned non-finite values at quadrature nodes")
    return basis.design_matrix(points).T @ (weights * values)


class EmpiricalCDF(TransformerMixin, BaseEstimator):
    """Map each feature through the empirical CDF of the training data.

    ``fit_transform`` on the training sample yields its pseudo-observations.

    Attributes
    ----------
    sorted_columns_ : ndarray of shape (n_samples, n_features)
        Column-wise sorted training data.
    n_features_in_ : int
    """

    def fit(self, X, y=None):
        X = check_samples(X, min_features=1)
        self.sorted_columns_ = np.sort(X, axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "sorted_columns_")
        X = check_samples(X, n_features=self.n_features_in_, min_features=1)
        n = self.sorted_columns_.shape[0]
        return np.column_stack([
            np.searchsorted(self.sorted_columns_[:, j], X[:, j], side="right") / n
            for j in range(self.n_features_in_)
        ])
