"""Quadratic penalty tying bivariate marginals of a spline to known ones.

For every pair of dimensions ``i < j`` the squared L2 distance between the
known bivariate marginal density ``c_ij`` and the ``(i, j)`` marginal of
``alpha^T B`` is expanded as

    alpha^T W^T G_ij W alpha - 2 alpha^T W^T r_ij + ||c_ij||^2

where ``W`` is the (closed form) bivariate marginalization operator,
``G_ij`` the 2-D Gram matrix and ``r_ij`` the inner products of ``c_ij``
with the 2-D hats. Summing over pairs gives ``Pen = a'Qa - 2q'a + c0``.
"""
import itertools
from dataclasses import dataclass

import numpy as np

from ._validation import check_coefficients
from .basis import TensorBasis
from .copulas import CopulaModel
from .exceptions import ConfigurationError, DimensionError, DomainError
from .moments import population_moments
from .quadrature import QuadratureRule

__all__ = [
    "GridMarginal",
    "BivariateMarginals",
    "PenaltyForm",
    "assemble_penalty",
    "eval_penalty",
]


class GridMarginal:
    """Bivariate density given by values at the midpoints of an ``r x r`` grid.

    ``values[a, b]`` is the density at ``((a + 0.5) / r, (b + 0.5) / r)``;
    the first index runs along the lower-numbered dimension of the pair.
    """

    def __init__(self, values):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise DimensionError("grid marginal must be a square matrix, got %s"
                                 % (values.shape,))
        if not np.all(np.isfinite(values)):
            raise DomainError("grid marginal contains non-finite values")
        if np.any(values < 0.0):
            raise DomainError("grid marginal contains negative density values")
        if abs(values.mean() - 1.0) > 1e-2:
            raise DomainError("grid marginal average is %.4f; a copula density "
                              "should average 1 within 1e-2" % values.mean())
        values.setflags(write=False)
        self.values = values

    @property
    def resolution(self):
        return self.values.shape[0]

    def midpoints(self):
        return _midpoints(self.resolution)

    @classmethod
    def from_model(cls, model, resolution=200):
        """Tabulate a 2-D copula model at grid midpoints."""
        values = model.density(_midpoints(resolution))
        return cls(values.reshape(resolution, resolution))


def _midpoints(r):
    x = (np.arange(r) + 0.5) / r
    xx, yy = np.meshgrid(x, x, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


class BivariateMarginals:
    """Known bivariate marginals, one per unordered pair of dimensions.

    Parameters
    ----------
    pairs : dict
        Maps ``(i, j)`` with ``i < j`` to a 2-D :class:`CopulaModel` or a
        :class:`GridMarginal`.
    """

    def __init__(self, pairs):
        self.pairs = {}
        for key, source in dict(pairs).items():
            i, j = (int(a) for a in key)
            if not 0 <= i < j:
                raise ConfigurationError("pair keys must satisfy i < j, got %r" % (key,))
            if isinstance(source, CopulaModel):
                if source.d != 2:
                    raise ConfigurationError("pair (%d, %d) needs a bivariate model" % (i, j))
            elif not isinstance(source, GridMarginal):
                source = GridMarginal(source)
            self.pairs[(i, j)] = source

    @classmethod
    def from_model(cls, model):
        """All bivariate marginals of a d-dimensional copula model."""
        return cls({pair: model.bivariate_marginal(pair)
                    for pair in itertools.combinations(range(model.d), 2)})

    def check_covers(self, d):
        expected = set(itertools.combinations(range(d), 2))
        missing = sorted(expected - set(self.pairs))
        extra = sorted(set(self.pairs) - expected)
        if missing:
            raise ConfigurationError("no bivariate marginal given for pairs %s" % missing)
        if extra:
            raise ConfigurationError("pairs %s do not exist for d=%d" % (extra, d))

    def __repr__(self):
        return "BivariateMarginals(%r)" % (self.pairs,)


@dataclass(frozen=True)
class PenaltyForm:
    """``Pen(alpha) = alpha' Q alpha - 2 q' alpha + c0``."""

    Q: np.ndarray
    q: np.ndarray
    c0: float

    def __call__(self, alpha):
        return eval_penalty(self, alpha)


def _pair_inner_products(source, sub_basis, order, grading):
    """Inner products with the 2-D hats and the squared norm of one marginal."""
    if isinstance(source, GridMarginal):
        points = source.midpoints()
        values = source.values.ravel()
        cell = 1.0 / source.resolution ** 2
        r = sub_basis.design_matrix(points).T @ (values * cell)
        return r, float(np.sum(values ** 2) * cell)
    grade = grading if source.singular_boundary else 0
    rule = QuadratureRule.for_grid(sub_basis.grid, order=order, grading=grade)
    r = population_moments(source.density, sub_basis, rule)
    norm2 = source.squared_norm()
    if norm2 is None:
        norm2 = float(rule.integrate(lambda p: source.density(p) ** 2))
    return r, norm2


def assemble_penalty(basis, marginals, order=5, grading=20, ordered_pairs=False):
    """Build the :class:`PenaltyForm` of ``basis`` against known marginals.

    Parameters
    ----------
    basis : TensorBasis
    marginals : BivariateMarginals or CopulaModel
        A d-dimensional model is expanded into its bivariate marginals.
    order : int, default=5
        Gauss-Legendre nodes per cell for analytic marginals.
    grading : int, default=20
        Levels of boundary refinement used for families with a singular
        boundary (Clayton, Gaussian). The rules are 2-D, so this is cheap.
    ordered_pairs : bool, default=False
        Count each pair twice, as a sum over ordered ``(i, j), i != j`` would.

    Notes
    -----
    ``c0`` uses closed forms where they exist. The Clayton density is not
    square integrable, so for that family ``c0`` is only the quadrature
    value of a divergent integral. ``Q`` and ``q``,
    which are all the optimizer sees, remain well defined.
    """
    if isinstance(marginals, CopulaModel):
        marginals = BivariateMarginals.from_model(marginals)
    marginals.check_covers(basis.dims)
    k = basis.n_basis
    Q = np.zeros((k, k))
    q = np.zeros(k)
    c0 = 0.0
    for (i, j), source in sorted(marginals.pairs.items()):
        W = basis.bivariate_operator((i, j))
        Q += W.T @ basis.pair_gram((i, j)) @ W
        sub_basis = TensorBasis((basis.grid.intervals[i], basis.grid.intervals[j]))
        r, norm2 = _pair_inner_products(source, sub_basis, order, grading)
        q += W.T @ r
        c0 += norm2
    Q = 0.5 * (Q + Q.T)
    if ordered_pairs:
        Q, q, c0 = 2.0 * Q, 2.0 * q, 2.0 * c0
    return PenaltyForm(Q=Q, q=q, c0=c0)


def eval_penalty(form, alpha):
    """Value of the penalty at ``alpha``; round-off below zero is clamped."""
    alpha = check_coefficients(alpha, form.q.shape[0])
    value = float(alpha @ form.Q @ alpha - 2.0 * form.q @ alpha + form.c0)
    if -1e-12 < value < 0.0:
        value = 0.0
    return value
