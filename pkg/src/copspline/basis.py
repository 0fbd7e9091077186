"""Tensor-product linear B-splines on [0, 1]^d with equally spaced knots.

Every dimension ``i`` is split into ``m_i`` cells of width ``h_i = 1 / m_i``
and carries one hat function per knot, ``m_i + 1`` in total, so the tensor
basis has ``k = prod(m_i + 1)`` members.

Basis functions are indexed by a flat index ``t`` in ``range(k)``. The
multi-index ``(j_1, ..., j_d)`` maps to ``t = j_1 + (m_1 + 1) * (j_2 + (m_2 + 1)
* (...))``, i.e. the first dimension varies fastest. Every Kronecker product
in this module is written ``kron(F_d, ..., F_1)`` to match that ordering.

All integrals (Gram entries, basis integrals, marginalizations) are closed
form; quadrature only appears in the tests as an oracle.
"""
import itertools
import math
from dataclasses import dataclass
from functools import cached_property, reduce

import numpy as np
import scipy.sparse as sp

from ._validation import check_coefficients, check_unit_cube
from .exceptions import DimensionError, DomainError

__all__ = [
    "KnotGrid",
    "GramMatrix",
    "TensorBasis",
    "hat_1d",
    "gram_1d",
    "integral_1d",
    "gram_tensor",
    "kron_all",
]


@dataclass(frozen=True)
class KnotGrid:
    """Equally spaced knots on [0, 1] for each of ``d >= 2`` dimensions.

    Parameters
    ----------
    intervals : tuple of int
        Number of cells ``m_i`` per dimension; the knot spacing is ``1 / m_i``.
    """

    intervals: tuple

    def __post_init__(self):
        raw = np.atleast_1d(self.intervals)
        if raw.ndim != 1 or any(int(v) != v for v in raw):
            raise DomainError("interval counts must be integers: %r" % (self.intervals,))
        intervals = tuple(int(v) for v in raw)
        if len(intervals) < 2:
            raise DomainError("a knot grid needs at least two dimensions")
        if any(m < 1 for m in intervals):
            raise DomainError("every dimension needs at least one cell: %r" % (intervals,))
        object.__setattr__(self, "intervals", intervals)

    @classmethod
    def from_spacings(cls, spacings):
        """Build a grid from knot spacings ``h_i``; each ``1 / h_i`` must be an integer."""
        intervals = []
        for h in spacings:
            if not 0.0 < h <= 1.0:
                raise DomainError("knot spacing must lie in (0, 1], got %r" % (h,))
            m = round(1.0 / h)
            if abs(m * h - 1.0) > 1e-9:
                raise DomainError("1/h must be an integer, got h=%r" % (h,))
            intervals.append(m)
        return cls(tuple(intervals))

    @classmethod
    def rule_of_thumb(cls, n_samples, n_dims):
        """Heuristic ``m_i = ceil(n ** (1 / (d + 4)))`` shared by all dimensions.

        Grows slowly enough that ``(1/h)^(2+d) k / n`` still shrinks with ``n``
        for ``d <= 3`` at the sample sizes this tool targets.
        """
        m = max(1, math.ceil(n_samples ** (1.0 / (n_dims + 4))))
        return cls((m,) * n_dims)

    @property
    def dims(self):
        return len(self.intervals)

    @property
    def spacings(self):
        return tuple(1.0 / m for m in self.intervals)

    @property
    def h_min(self):
        return min(self.spacings)

    @property
    def shape(self):
        """Number of basis functions per dimension, ``m_i + 1``."""
        return tuple(m + 1 for m in self.intervals)

    @property
    def n_basis(self):
        return math.prod(self.shape)

    @property
    def beta(self):
        """Weight ``1 / prod(h_i)`` of the moment-matching term."""
        return float(math.prod(self.intervals))

    def knots(self, axis):
        return np.linspace(0.0, 1.0, self.intervals[axis] + 1)

    def flat_index(self, multi_index):
        """Flat index of a multi-index (first dimension fastest)."""
        multi_index = tuple(int(j) for j in multi_index)
        if len(multi_index) != self.dims:
            raise DimensionError("multi-index must have %d entries" % self.dims)
        for j, size in zip(multi_index, self.shape):
            if not 0 <= j < size:
                raise DomainError("multi-index %r out of range for shape %r"
                                  % (multi_index, self.shape))
        return int(np.ravel_multi_index(multi_index[::-1], self.shape[::-1]))

    def multi_index(self, t):
        """Inverse of :meth:`flat_index`."""
        if not 0 <= t < self.n_basis:
            raise DomainError("flat index %r out of range [0, %d)" % (t, self.n_basis))
        return tuple(int(j) for j in np.unravel_index(int(t), self.shape[::-1])[::-1])

    def to_dict(self):
        return {"intervals": list(self.intervals)}

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(data["intervals"]))


def hat_1d(knot_index, x, m):
    """Linear B-spline on ``m`` equal cells centred at knot ``knot_index / m``.

    Accepts scalar or array ``x``. The last hat equals 1 at ``x = 1``.
    """
    if not 0 <= knot_index <= m:
        raise DomainError("knot index %r outside [0, %d]" % (knot_index, m))
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("x must lie in [0, 1]")
    value = np.maximum(0.0, 1.0 - np.abs(x * m - knot_index))
    return float(value) if value.ndim == 0 else value


def gram_1d(m):
    """Matrix of inner products of the ``m + 1`` hats on [0, 1]."""
    if m < 1:
        raise DomainError("m must be >= 1")
    h = 1.0 / m
    diag = np.full(m + 1, 2.0 * h / 3.0)
    diag[[0, -1]] = h / 3.0
    off = np.full(m, h / 6.0)
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def integral_1d(m):
    """Integrals of the ``m + 1`` hats over [0, 1]."""
    if m < 1:
        raise DomainError("m must be >= 1")
    h = 1.0 / m
    w = np.full(m + 1, h)
    w[[0, -1]] = h / 2.0
    return w


def kron_all(factors):
    """``kron(F_d, ..., F_1)`` for factors given in dimension order ``F_1, ..., F_d``."""
    return reduce(np.kron, list(factors)[::-1])


@dataclass(frozen=True)
class GramMatrix:
    """Gram matrix of a tensor basis, kept in Kronecker-factored form."""

    factors: tuple

    @cached_property
    def dense(self):
        return kron_all(self.factors)

    def matvec(self, x):
        """Product with a vector without materializing the dense matrix."""
        x = np.asarray(x, dtype=np.float64)
        shape = tuple(f.shape[0] for f in self.factors)
        # Reshape so that axis s of the tensor is dimension s (C order, last fastest).
        tensor = x.reshape(shape[::-1])
        for axis, factor in enumerate(self.factors):
            tensor = np.moveaxis(
                np.tensordot(factor, tensor, axes=([1], [tensor.ndim - 1 - axis])),
                0, tensor.ndim - 1 - axis)
        return tensor.reshape(-1)


def gram_tensor(grid):
    return GramMatrix(tuple(gram_1d(m) for m in grid.intervals))


class TensorBasis:
    """The tensor-product hat basis ``B_1, ..., B_k`` on a :class:`KnotGrid`.

    Parameters
    ----------
    grid : KnotGrid or sequence of int
        Knot grid, or the per-dimension cell counts.
    """

    def __init__(self, grid):
        if not isinstance(grid, KnotGrid):
            grid = KnotGrid(tuple(grid))
        self.grid = grid
        self.gram_factors = tuple(gram_1d(m) for m in grid.intervals)
        self.integral_factors = tuple(integral_1d(m) for m in grid.intervals)
        for arr in self.gram_factors + self.integral_factors:
            arr.setflags(write=False)

    def __repr__(self):
        return "TensorBasis(intervals=%r)" % (self.grid.intervals,)

    @property
    def dims(self):
        return self.grid.dims

    @property
    def n_basis(self):
        return self.grid.n_basis

    @cached_property
    def gram(self):
        """Dense Gram matrix ``P``."""
        g = kron_all(self.gram_factors)
        g.setflags(write=False)
        return g

    @cached_property
    def integrals(self):
        """Vector of ``integral B_t``; equals ``gram @ ones`` by partition of unity."""
        w = kron_all(self.integral_factors)
        w.setflags(write=False)
        return w

    # -- evaluation --------------------------------------------------------

    def _corners(self, U):
        """Indices and weights of the (at most) ``2^d`` nonzero basis values per point."""
        n = U.shape[0]
        cells, fracs = [], []
        for axis, m in enumerate(self.grid.intervals):
            scaled = U[:, axis] * m
            c = np.minimum(np.floor(scaled).astype(np.intp), m - 1)
            cells.append(c)
            fracs.append(scaled - c)
        strides = np.cumprod((1,) + self.grid.shape[:-1])
        n_corners = 2 ** self.dims
        idx = np.zeros((n, n_corners), dtype=np.intp)
        w = np.ones((n, n_corners))
        for corner, bits in enumerate(itertools.product((0, 1), repeat=self.dims)):
            for axis, bit in enumerate(bits):
                idx[:, corner] += (cells[axis] + bit) * strides[axis]
                w[:, corner] *= fracs[axis] if bit else 1.0 - fracs[axis]
        return idx, w

    def design_matrix(self, U):
        """Sparse ``(n, k)`` matrix of basis values ``B_t(u_i)``."""
        U = check_unit_cube(U, self.dims)
        idx, w = self._corners(U)
        rows = np.repeat(np.arange(U.shape[0]), idx.shape[1])
        return sp.csr_matrix((w.ravel(), (rows, idx.ravel())),
                             shape=(U.shape[0], self.n_basis))

    def evaluate(self, t, u):
        """Value of basis function ``t`` at points ``u``: product of 1-D hats."""
        if not 0 <= t < self.n_basis:
            raise DomainError("flat index %r out of range [0, %d)" % (t, self.n_basis))
        U = check_unit_cube(u, self.dims)
        value = np.ones(U.shape[0])
        for axis, j in enumerate(self.grid.multi_index(t)):
            value *= hat_1d(j, U[:, axis], self.grid.intervals[axis])
        return value[0] if np.ndim(u) == 1 else value

    def expansion(self, alpha, u):
        """Evaluate ``sum_t alpha_t B_t`` at points ``u``."""
        alpha = check_coefficients(alpha, self.n_basis)
        U = check_unit_cube(u, self.dims)
        idx, w = self._corners(U)
        value = np.sum(alpha[idx] * w, axis=1)
        return value[0] if np.ndim(u) == 1 else value

    def basis_sums(self, U):
        """Column sums of the design matrix, accumulated in a fixed order."""
        U = check_unit_cube(U, self.dims)
        idx, w = self._corners(U)
        return np.bincount(idx.ravel(), weights=w.ravel(), minlength=self.n_basis)

    # -- marginalization ---------------------------------------------------

    def _check_axis(self, axis):
        if not 0 <= axis < self.dims:
            raise DomainError("axis %r out of range for d=%d" % (axis, self.dims))

    def marginal_operator(self, axis):
        """Matrix mapping ``alpha`` to the 1-D spline coefficients of the
        ``axis`` marginal of ``alpha^T B``."""
        self._check_axis(axis)
        factors = [np.eye(s) if a == axis else w[np.newaxis, :]
                   for a, (s, w) in enumerate(zip(self.grid.shape, self.integral_factors))]
        return kron_all(factors)

    def bivariate_operator(self, axes):
        """Matrix mapping ``alpha`` to the flattened 2-D coefficients of the
        ``(i, j)`` bivariate marginal; output index ``a + (m_i + 1) * b``."""
        i, j = self._check_pair(axes)
        factors = [np.eye(s) if a in (i, j) else w[np.newaxis, :]
                   for a, (s, w) in enumerate(zip(self.grid.shape, self.integral_factors))]
        return kron_all(factors)

    def _check_pair(self, axes):
        i, j = (int(a) for a in axes)
        if not 0 <= i < j < self.dims:
            raise DomainError("axes must satisfy 0 <= i < j < %d, got %r" % (self.dims, axes))
        return i, j

    def marginal_1d_coeffs(self, alpha, axis):
        alpha = check_coefficients(alpha, self.n_basis)
        return self.marginal_operator(axis) @ alpha

    def bivariate_marginal_coeffs(self, alpha, axes):
        """Coefficient matrix ``gamma[a, b]`` of the ``(i, j)`` marginal."""
        alpha = check_coefficients(alpha, self.n_basis)
        i, j = self._check_pair(axes)
        flat = self.bivariate_operator((i, j)) @ alpha
        return flat.reshape(self.grid.shape[j], self.grid.shape[i]).T

    def pair_gram(self, axes):
        """Gram matrix of the 2-D tensor basis on dimensions ``(i, j)``."""
        i, j = self._check_pair(axes)
        return np.kron(self.gram_factors[j], self.gram_factors[i])
