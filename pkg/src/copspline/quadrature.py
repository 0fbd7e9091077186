"""Composite Gauss-Legendre rules on [0, 1]^d.

A rule is a set of breakpoints per dimension plus a number of nodes per
cell. Aligning the breakpoints with spline knots makes the spline factor of
an integrand polynomial on every cell, so the rule is exact for it; optional
geometric grading towards 0 and 1 handles copula densities that blow up on
the boundary. Nodes never touch the boundary.
"""
import math

import numpy as np

from .exceptions import DomainError, EvaluationError

__all__ = ["QuadratureRule", "graded_breaks", "default_grading"]


def default_grading(d):
    """Boundary refinement levels for singular densities; fewer in higher d to bound node counts."""
    return 12 if d <= 2 else 6


def graded_breaks(levels, ratio=0.5):
    """Breakpoints refining geometrically towards both ends of [0, 1].

    ``levels`` extra points are placed at ``ratio**l / 2`` and
    ``1 - ratio**l / 2`` for ``l = 1..levels``.
    """
    inner = 0.5 * ratio ** np.arange(1, levels + 1)
    return np.unique(np.concatenate([[0.0, 0.5, 1.0], inner, 1.0 - inner]))


class QuadratureRule:
    """Tensor-product composite Gauss-Legendre rule.

    Parameters
    ----------
    breaks : sequence of array-like
        Sorted breakpoints for each dimension, starting at 0 and ending at 1.
    order : int, default=5
        Gauss-Legendre nodes per cell and dimension.
    """

    def __init__(self, breaks, order=5):
        if order < 1:
            raise DomainError("quadrature order must be >= 1")
        self.order = int(order)
        self.breaks = []
        for b in breaks:
            b = np.unique(np.asarray(b, dtype=np.float64))
            if b[0] != 0.0 or b[-1] != 1.0:
                raise DomainError("breakpoints must span [0, 1] exactly")
            self.breaks.append(b)
        x, w = np.polynomial.legendre.leggauss(self.order)
        self._ref_nodes = 0.5 * (x + 1.0)
        self._ref_weights = 0.5 * w
        self.axis_nodes, self.axis_weights = zip(*(self._axis_rule(b) for b in self.breaks))

    @classmethod
    def uniform(cls, cells, order=5):
        """``cells[i]`` equal cells in dimension ``i``."""
        return cls([np.linspace(0.0, 1.0, c + 1) for c in cells], order=order)

    @classmethod
    def for_grid(cls, grid, order=5, refine=1, grading=0):
        """Rule whose cells are aligned with (and optionally subdivide) the knots of ``grid``."""
        breaks = []
        for m in grid.intervals:
            b = np.linspace(0.0, 1.0, m * refine + 1)
            if grading:
                b = np.union1d(b, graded_breaks(grading))
            breaks.append(b)
        return cls(breaks, order=order)

    @classmethod
    def for_intervals(cls, intervals, order=5, refine=1, grading=0):
        from .basis import KnotGrid
        return cls.for_grid(KnotGrid(tuple(intervals)), order, refine, grading)

    def _axis_rule(self, b):
        widths = np.diff(b)
        nodes = (b[:-1, None] + widths[:, None] * self._ref_nodes[None, :]).ravel()
        weights = (widths[:, None] * self._ref_weights[None, :]).ravel()
        return nodes, weights

    @property
    def dims(self):
        return len(self.breaks)

    @property
    def n_nodes(self):
        return math.prod(len(n) for n in self.axis_nodes)

    def nodes(self):
        """All tensor nodes, shape ``(N, d)``, and their weights, shape ``(N,)``."""
        mesh = np.meshgrid(*self.axis_nodes, indexing="ij")
        points = np.stack([g.ravel() for g in mesh], axis=1)
        wmesh = np.meshgrid(*self.axis_weights, indexing="ij")
        weights = np.prod(np.stack([g.ravel() for g in wmesh], axis=1), axis=1)
        return points, weights

    def integrate(self, func, chunk=200_000):
        """Integrate ``func`` (vectorized over rows of an ``(N, d)`` array).

        ``func`` may return shape ``(N,)`` or ``(N, p)``; the result then has
        shape ``()`` or ``(p,)``.
        """
        points, weights = self.nodes()
        total = None
        for start in range(0, len(weights), chunk):
            values = np.asarray(func(points[start:start + chunk]), dtype=np.float64)
            if not np.all(np.isfinite(values)):
                raise EvaluationError("integrand returned non-finite values")
            part = np.tensordot(weights[start:start + chunk], values, axes=(0, 0))
            total = part if total is None else total + part
        return total
