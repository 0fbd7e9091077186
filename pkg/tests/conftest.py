"""Independent numerical oracles shared by the test modules.

These deliberately avoid copspline's own quadrature and Gram code so that
they can check it.
"""
import itertools

import numpy as np
import pytest


def gl_nodes(breaks, order):
    """Composite Gauss-Legendre nodes/weights on the cells delimited by ``breaks``."""
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        nodes.append(a + (b - a) * (x + 1.0) / 2.0)
        weights.append((b - a) * w / 2.0)
    return np.concatenate(nodes), np.concatenate(weights)


def gl_tensor(breaks_per_dim, order):
    """Tensor product of :func:`gl_nodes`, returned as (points, weights)."""
    rules = [gl_nodes(b, order) for b in breaks_per_dim]
    points = np.array(list(itertools.product(*[r[0] for r in rules])))
    weights = np.array([np.prod(c) for c in itertools.product(*[r[1] for r in rules])])
    return points, weights


def midpoint_grid(cells, d=2):
    """Midpoints of a uniform ``cells^d`` grid and the common cell volume."""
    x = (np.arange(cells) + 0.5) / cells
    mesh = np.meshgrid(*([x] * d), indexing="ij")
    return np.column_stack([g.ravel() for g in mesh]), 1.0 / cells ** d


def hat(j, x, m):
    """Textbook hat function, written independently of copspline.basis."""
    knot = j / m
    h = 1.0 / m
    return np.where(np.abs(x - knot) < h, 1.0 - np.abs(x - knot) / h, 0.0)


def brute_basis(t, U, intervals):
    """B_t(U) by decoding the flat index by hand (dimension 1 fastest)."""
    value = np.ones(len(U))
    for axis, m in enumerate(intervals):
        j = t % (m + 1)
        t //= m + 1
        value = value * hat(j, U[:, axis], m)
    return value


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line("%s criterion %2d: %s (%s)"
                                    % ("PASS" if passed else "FAIL", number, title, detail))
