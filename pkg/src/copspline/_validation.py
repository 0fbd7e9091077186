"""Input validation helpers built on top of :mod:`sklearn.utils.validation`."""
import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import DimensionError, DomainError


def check_samples(X, n_features=None, min_features=2):
    """Validate a raw sample matrix of shape (n_samples, n_features)."""
    X = check_array(X, dtype=np.float64, ensure_2d=True, ensure_all_finite=True)
    if X.shape[1] < min_features:
        raise DimensionError(
            "expected at least %d columns, got %d" % (min_features, X.shape[1]))
    if n_features is not None and X.shape[1] != n_features:
        raise DimensionError(
            "expected %d columns, got %d" % (n_features, X.shape[1]))
    return X


def check_unit_cube(U, n_features, open_interval=False):
    """Validate points in [0, 1]^d (or (0, 1)^d when `open_interval`).

    A single point given as a 1-D array is promoted to shape (1, d).
    """
    U = np.asarray(U, dtype=np.float64)
    if U.ndim == 1:
        U = U.reshape(1, -1)
    if U.ndim != 2 or U.shape[1] != n_features:
        raise DimensionError(
            "points must have shape (n, %d), got %s" % (n_features, U.shape))
    if not np.all(np.isfinite(U)):
        raise DomainError("points must be finite")
    if open_interval:
        if np.any(U <= 0.0) or np.any(U >= 1.0):
            raise DomainError("points must lie strictly inside (0, 1)^d")
    elif np.any(U < 0.0) or np.any(U > 1.0):
        raise DomainError("points must lie in [0, 1]^d")
    return U


def check_coefficients(alpha, size):
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim != 1 or alpha.shape[0] != size:
        raise DimensionError(
            "coefficient vector must have length %d, got shape %s" % (size, alpha.shape))
    return alpha
