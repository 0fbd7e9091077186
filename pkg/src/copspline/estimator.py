"""Penalized least-squares spline estimator of a copula density.

The fitted density is ``c_hat = alpha^T B`` on a tensor hat basis, with
``alpha`` minimizing

    beta * ||P alpha - M_hat||^2 + lam * Pen(alpha)

subject to ``alpha >= 0`` and every 1-D marginal of ``alpha^T B`` being
uniform. ``P`` is the Gram matrix, ``M_hat`` the empirical moment vector,
``beta = 1 / prod(h_i)`` and ``Pen`` the distance of the bivariate marginals
to known ones (see :mod:`copspline.penalty`).

For hat functions, ``alpha^T B >= 0`` everywhere iff ``alpha >= 0``, and a
marginal is identically 1 iff its 1-D spline coefficients all equal 1, so
both shape constraints are linear in ``alpha``.
"""
import json
import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, DensityMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_samples, check_unit_cube
from .basis import KnotGrid, TensorBasis
from .copulas import CopulaModel, l2_error
from .exceptions import ConfigurationError, ConvergenceError, DomainError
from .moments import moment_vector, pseudo_observations
from .penalty import assemble_penalty, eval_penalty
from .qp import QuadraticProgram, solve
from .quadrature import QuadratureRule, default_grading, graded_breaks

__all__ = [
    "SCHEMA_VERSION",
    "CopulaDensityEstimate",
    "SplineCopulaDensity",
    "build_constraints",
    "build_program",
    "fit_copula_density",
]

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def build_constraints(basis):
    """Uniform-marginal constraints ``E alpha = 1``.

    One row per dimension ``i`` and knot ``j``: the ``j``-th spline
    coefficient of the ``i``-th marginal of ``alpha^T B``. The rows of each
    dimension sum to the total-mass row, so the rank is
    ``sum(m_i + 1) - (d - 1)``.
    """
    E = np.vstack([basis.marginal_operator(axis) for axis in range(basis.dims)])
    return E, np.ones(E.shape[0])


def build_program(basis, moments, lam=0.0, penalty=None):
    """The :class:`QuadraticProgram` of the estimator."""
    if lam < 0:
        raise ConfigurationError("lam must be >= 0, got %r" % (lam,))
    if lam > 0 and penalty is None:
        raise ConfigurationError("a penalty form is required when lam > 0")
    beta = basis.grid.beta
    P = basis.gram
    G = beta * (P.T @ P)
    g = beta * (P.T @ moments)
    const = beta * float(moments @ moments)
    if lam > 0:
        G = G + lam * penalty.Q
        g = g + lam * penalty.q
        const += lam * penalty.c0
    E, e = build_constraints(basis)
    return QuadraticProgram(G=0.5 * (G + G.T), g=g, E=E, e=e, nonneg=True, const=const)


def _error_rule(grid, singular, order=5, cells=8):
    grading = default_grading(grid.dims)
    breaks = []
    for axis in range(grid.dims):
        b = np.union1d(grid.knots(axis), np.linspace(0.0, 1.0, cells + 1))
        if singular:
            b = np.union1d(b, graded_breaks(grading))
        breaks.append(b)
    return QuadratureRule(breaks, order=order)


@dataclass
class CopulaDensityEstimate:
    """Fitted spline coefficients together with their knot grid."""

    grid: KnotGrid
    alpha: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        if self.alpha.shape != (self.grid.n_basis,):
            raise DomainError("alpha must have length %d" % self.grid.n_basis)
        self._basis = TensorBasis(self.grid)

    @property
    def basis(self):
        return self._basis

    @property
    def dims(self):
        return self.grid.dims

    def evaluate(self, points):
        """Density values ``c_hat(u)`` at points in [0, 1]^d."""
        return self._basis.expansion(self.alpha, points)

    __call__ = evaluate

    def marginal_coeffs(self, axis):
        return self._basis.marginal_1d_coeffs(self.alpha, axis)

    def error_report(self, truth, quadrature=None):
        """L2 distance to a reference density (typically a :class:`CopulaModel`).

        For singular families with a closed-form ``||c||^2``, the part of
        ``integral c^2`` that the graded rule misses near the corners is added
        back, since the other terms of ``(c_hat - c)^2`` are integrated
        accurately.
        """
        if getattr(truth, "d", self.dims) != self.dims:
            raise DomainError("truth has d=%d but the estimate has d=%d"
                              % (truth.d, self.dims))
        if quadrature is not None:
            return l2_error(self.evaluate, truth, quadrature)
        singular = getattr(truth, "singular_boundary", False)
        rule = _error_rule(self.grid, singular)
        norm = truth.squared_norm() if isinstance(truth, CopulaModel) else None
        if not singular or norm is None or not np.isfinite(norm):
            return l2_error(self.evaluate, truth, rule)

        def terms(points):
            c = np.asarray(truth(points), dtype=np.float64)
            return np.column_stack([(self.evaluate(points) - c) ** 2, c ** 2])

        sq_diff, sq_truth = rule.integrate(terms)
        return float(np.sqrt(max(sq_diff + norm - sq_truth, 0.0)))

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "grid": self.grid.to_dict(),
            "alpha": [float(a) for a in self.alpha],
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, data):
        version = data.get("schema_version", SCHEMA_VERSION)
        if version > SCHEMA_VERSION:
            raise ConfigurationError("estimate schema version %r is newer than supported %d"
                                     % (version, SCHEMA_VERSION))
        return cls(KnotGrid.from_dict(data["grid"]), np.asarray(data["alpha"]),
                   data.get("diagnostics", {}))

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def fit_copula_density(X, grid=None, lam=1.0, marginals=None, tol=1e-8, max_iter=None,
                       quad_order=5, ordered_pairs=False):
    """Fit the constrained penalized spline estimator to raw samples.

    Parameters
    ----------
    X : array-like of shape (n_samples, d)
        Raw observations; only their column-wise ranks matter.
    grid : KnotGrid or sequence of int, optional
        Cells per dimension. Defaults to :meth:`KnotGrid.rule_of_thumb`.
    lam : float, default=1.0
        Penalty weight; 0 disables the penalty.
    marginals : BivariateMarginals or CopulaModel, optional
        Known bivariate marginals; required when ``lam > 0``.
    tol : float, default=1e-8
        KKT tolerance of the solver.
    max_iter : int, optional
    quad_order : int, default=5
        Gauss-Legendre nodes per cell when integrating analytic marginals.
    ordered_pairs : bool, default=False
        Double count pairs in the penalty.

    Returns
    -------
    CopulaDensityEstimate

    Raises
    ------
    ConfigurationError
        If ``lam > 0`` without marginals, or grid and data disagree.
    ConvergenceError
        If no KKT point within ``tol`` was found.
    """
    X = check_samples(X)
    n, d = X.shape
    if grid is None:
        grid = KnotGrid.rule_of_thumb(n, d)
    elif not isinstance(grid, KnotGrid):
        grid = KnotGrid(tuple(grid))
    if grid.dims != d:
        raise ConfigurationError("grid has %d dimensions but data has %d columns"
                                 % (grid.dims, d))
    if lam < 0:
        raise ConfigurationError("lam must be >= 0, got %r" % (lam,))
    if lam > 0 and marginals is None:
        raise ConfigurationError("bivariate marginals are required when lam > 0")

    basis = TensorBasis(grid)
    moments = moment_vector(pseudo_observations(X), basis)
    penalty = None
    if lam > 0:
        penalty = assemble_penalty(basis, marginals, order=quad_order,
                                   ordered_pairs=ordered_pairs)
    qp = build_program(basis, moments, lam, penalty)
    # The independence density alpha = 1 is always feasible.
    solution = solve(qp, tol=tol, max_iter=max_iter, x0=np.ones(basis.n_basis))
    alpha = solution.alpha
    residual = qp.E @ alpha - qp.e
    misfit = basis.gram @ alpha - moments
    diagnostics = {
        "n_samples": int(n),
        "lam": float(lam),
        "beta": grid.beta,
        "tol": float(tol),
        "status": solution.status,
        "iterations": int(solution.iterations),
        "objective": float(solution.objective),
        "moment_misfit": float(grid.beta * misfit @ misfit),
        "penalty": float(eval_penalty(penalty, alpha)) if penalty is not None else None,
        "kkt": solution.kkt.to_dict(),
        "constraint_residuals": {
            "marginal_max_abs": float(np.abs(residual).max()),
            "min_alpha": float(alpha.min()),
        },
    }
    logger.debug("fit n=%d grid=%s lam=%g status=%s iterations=%d", n, grid.intervals,
                 lam, solution.status, solution.iterations)
    if not solution.converged or not solution.kkt.ok(tol):
        raise ConvergenceError(
            "solver finished with status %r and max KKT residual %.3e"
            % (solution.status, solution.kkt.max_residual), diagnostics)
    return CopulaDensityEstimate(grid=grid, alpha=alpha, diagnostics=diagnostics)


class SplineCopulaDensity(DensityMixin, BaseEstimator):
    """Copula density estimator on tensor-product linear B-splines.

    Parameters
    ----------
    intervals : int or tuple of int, optional
        Cells per dimension (``1 / h_i``). An int is shared by all
        dimensions; ``None`` picks ``ceil(n ** (1 / (d + 4)))`` at fit time.
    lam : float, default=1.0
        Weight of the bivariate-marginal penalty.
    marginals : BivariateMarginals or CopulaModel, optional
        Known bivariate marginals, needed when ``lam > 0``.
    tol : float, default=1e-8
    max_iter : int, optional
    quad_order : int, default=5
    ordered_pairs : bool, default=False

    Attributes
    ----------
    estimate_ : CopulaDensityEstimate
    grid_ : KnotGrid
    alpha_ : ndarray of shape (k,)
    n_features_in_ : int

    Examples
    --------
    >>> from copspline import CopulaModel, SplineCopulaDensity
    >>> X = CopulaModel("fgm", theta=0.5).sample(500, seed=0)
    >>> est = SplineCopulaDensity(intervals=3, lam=0.0).fit(X)
    >>> est.predict([[0.5, 0.5]]).shape
    (1,)
    """

    def __init__(self, intervals=None, lam=1.0, marginals=None, tol=1e-8, max_iter=None,
                 quad_order=5, ordered_pairs=False):
        self.intervals = intervals
        self.lam = lam
        self.marginals = marginals
        self.tol = tol
        self.max_iter = max_iter
        self.quad_order = quad_order
        self.ordered_pairs = ordered_pairs

    def fit(self, X, y=None):
        """Fit on raw samples ``X`` of shape (n_samples, d)."""
        X = check_samples(X)
        grid = self.intervals
        if isinstance(grid, (int, np.integer)):
            grid = (int(grid),) * X.shape[1]
        self.estimate_ = fit_copula_density(
            X, grid=grid, lam=self.lam, marginals=self.marginals, tol=self.tol,
            max_iter=self.max_iter, quad_order=self.quad_order,
            ordered_pairs=self.ordered_pairs)
        self.grid_ = self.estimate_.grid
        self.alpha_ = self.estimate_.alpha
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, U):
        """Estimated density at points ``U`` in [0, 1]^d."""
        check_is_fitted(self, "estimate_")
        U = check_unit_cube(U, self.n_features_in_)
        return self.estimate_.evaluate(U)

    def score_samples(self, U):
        """Log density at ``U``; ``-inf`` where the estimate is zero."""
        density = self.predict(U)
        with np.errstate(divide="ignore"):
            return np.log(np.maximum(density, 0.0))

    def score(self, U, y=None):
        """Total log density of ``U``."""
        return float(np.sum(self.score_samples(U)))

    def l2_error(self, truth, quadrature=None):
        check_is_fitted(self, "estimate_")
        return self.estimate_.error_report(truth, quadrature)
