"""Analytic copula families used as known marginals and simulation ground truth.

Supported families:

* ``independence`` -- any ``d >= 2``;
* ``fgm`` -- Farlie-Gumbel-Morgenstern, ``d = 2``, ``theta`` in [-1, 1];
* ``clayton`` -- ``d = 2``, ``theta > 0``;
* ``gaussian`` -- any ``d >= 2``, correlation matrix ``rho``.

Random numbers come from :func:`numpy.random.default_rng` (PCG64), so a
seed fully determines a sample.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._validation import check_unit_cube
from .exceptions import DomainError, EvaluationError, UnsupportedOperationError
from .quadrature import QuadratureRule, default_grading

__all__ = ["CopulaModel", "FAMILIES", "l2_error"]

FAMILIES = ("independence", "fgm", "clayton", "gaussian")


@dataclass(frozen=True)
class CopulaModel:
    """A parametric copula.

    Parameters
    ----------
    family : {"independence", "fgm", "clayton", "gaussian"}
    d : int, default=2
    theta : float, optional
        Dependence parameter of the FGM and Clayton families.
    rho : array-like, optional
        Correlation matrix of the Gaussian family. A scalar is accepted for
        ``d = 2``.
    """

    family: str
    d: int = 2
    theta: float = None
    rho: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        family = str(self.family).lower()
        object.__setattr__(self, "family", family)
        if family not in FAMILIES:
            raise DomainError("unknown copula family %r; expected one of %s"
                              % (self.family, ", ".join(FAMILIES)))
        d = int(self.d)
        if d < 2:
            raise DomainError("copula dimension must be >= 2")
        object.__setattr__(self, "d", d)
        if family in ("fgm", "clayton"):
            if d != 2:
                raise DomainError("the %s family is only supported for d=2" % family)
            if self.theta is None:
                raise DomainError("the %s family needs theta" % family)
            theta = float(self.theta)
            if family == "fgm" and not -1.0 <= theta <= 1.0:
                raise DomainError("FGM theta must lie in [-1, 1], got %r" % theta)
            if family == "clayton" and not theta > 0.0:
                raise DomainError("Clayton theta must be > 0, got %r" % theta)
            object.__setattr__(self, "theta", theta)
        if family == "gaussian":
            object.__setattr__(self, "rho", _check_correlation(self.rho, d))

    def __eq__(self, other):
        if not isinstance(other, CopulaModel):
            return NotImplemented
        same_rho = (self.rho is None and other.rho is None) or (
            self.rho is not None and other.rho is not None
            and np.array_equal(self.rho, other.rho))
        return (self.family, self.d, self.theta) == (other.family, other.d, other.theta) \
            and same_rho

    def __hash__(self):
        return hash((self.family, self.d, self.theta))

    # -- serialization -----------------------------------------------------

    def to_dict(self):
        data = {"family": self.family, "d": self.d}
        if self.theta is not None:
            data["theta"] = self.theta
        if self.rho is not None:
            data["rho"] = self.rho.tolist()
        return data

    @classmethod
    def from_dict(cls, data):
        if "family" not in data:
            raise DomainError("model specification needs a 'family' field")
        rho = data.get("rho")
        d = data.get("d")
        if d is None:
            d = np.asarray(rho).shape[0] if rho is not None and np.ndim(rho) == 2 else 2
        return cls(family=data["family"], d=d, theta=data.get("theta"), rho=rho)

    # -- density -----------------------------------------------------------

    @property
    def singular_boundary(self):
        """Whether the density may be unbounded on the boundary of the cube."""
        return self.family in ("clayton", "gaussian")

    def density(self, u):
        """Copula density at points ``u`` (shape ``(n, d)`` or ``(d,)``)."""
        U = check_unit_cube(u, self.d, open_interval=self.singular_boundary)
        if self.family == "independence":
            value = np.ones(U.shape[0])
        elif self.family == "fgm":
            value = 1.0 + self.theta * (1.0 - 2.0 * U[:, 0]) * (1.0 - 2.0 * U[:, 1])
        elif self.family == "clayton":
            value = _clayton_density(U[:, 0], U[:, 1], self.theta)
        else:
            value = _gaussian_density(U, self.rho)
        return value[0] if np.ndim(u) == 1 else value

    def __call__(self, u):
        return self.density(u)

    def squared_norm(self):
        """Closed-form ``integral c^2`` over the cube, or None if unavailable.

        Returns ``inf`` when the integral diverges (Gaussian with a
        correlation eigenvalue >= 2).
        """
        if self.family == "independence":
            return 1.0
        if self.family == "fgm":
            return 1.0 + self.theta ** 2 / 9.0
        if self.family == "gaussian":
            # Gaussian integral of exp(-z' (2 R^-1 - I) z / 2)
            A = 2.0 * np.linalg.inv(self.rho) - np.eye(self.d)
            if np.linalg.eigvalsh(A).min() <= 0.0:
                return float("inf")
            return float(1.0 / (np.linalg.det(self.rho) * np.sqrt(np.linalg.det(A))))
        return None

    # -- sampling ----------------------------------------------------------

    def sample(self, n, seed=None):
        """Draw ``n`` i.i.d. points from the copula.

        FGM and Clayton use the conditional inverse method; the Gaussian
        family maps correlated normals through the normal CDF.
        """
        if n < 1:
            raise DomainError("sample size must be >= 1")
        rng = np.random.default_rng(seed)
        if self.family == "independence":
            return rng.random((n, self.d))
        if self.family == "gaussian":
            chol = np.linalg.cholesky(self.rho)
            z = rng.standard_normal((n, self.d)) @ chol.T
            return special.ndtr(z)
        u = rng.random(n)
        w = rng.random(n)
        if self.family == "fgm":
            v = _fgm_conditional_inverse(u, w, self.theta)
        else:
            t = self.theta
            v = (u ** (-t) * (w ** (-t / (1.0 + t)) - 1.0) + 1.0) ** (-1.0 / t)
        return np.column_stack([u, v])

    # -- marginals ---------------------------------------------------------

    def bivariate_marginal(self, axes):
        """The copula of coordinates ``axes = (i, j)``, ``0 <= i < j < d``."""
        i, j = (int(a) for a in axes)
        if not 0 <= i < j < self.d:
            raise DomainError("axes must satisfy 0 <= i < j < %d, got %r" % (self.d, axes))
        if self.d == 2:
            return self
        if self.family == "independence":
            return CopulaModel("independence", d=2)
        if self.family == "gaussian":
            return CopulaModel("gaussian", d=2, rho=self.rho[np.ix_([i, j], [i, j])])
        raise UnsupportedOperationError(
            "no closed-form bivariate marginal for the %s family" % self.family)

    def quadrature_rule(self, order=5, cells=8, grading=None):
        """A rule on [0, 1]^d suited to this family's boundary behaviour."""
        if not self.singular_boundary:
            grade = 0
        else:
            grade = default_grading(self.d) if grading is None else grading
        return QuadratureRule.for_intervals((cells,) * self.d, order=order, grading=grade)


def _check_correlation(rho, d):
    if rho is None:
        raise DomainError("the gaussian family needs a correlation matrix rho")
    rho = np.asarray(rho, dtype=np.float64)
    if rho.ndim == 0:
        if d != 2:
            raise DomainError("a scalar rho is only valid for d=2")
        rho = np.array([[1.0, float(rho)], [float(rho), 1.0]])
    if rho.shape != (d, d):
        raise DomainError("rho must have shape (%d, %d), got %s" % (d, d, rho.shape))
    if not np.allclose(rho, rho.T) or not np.allclose(np.diag(rho), 1.0):
        raise DomainError("rho must be symmetric with unit diagonal")
    if np.linalg.eigvalsh(rho).min() <= 0.0:
        raise DomainError("rho must be positive definite")
    rho = 0.5 * (rho + rho.T)
    rho.setflags(write=False)
    return rho


def _clayton_density(u, v, theta):
    s = u ** (-theta) + v ** (-theta) - 1.0
    return (1.0 + theta) * (u * v) ** (-theta - 1.0) * s ** (-2.0 - 1.0 / theta)


def _gaussian_density(U, rho):
    z = special.ndtri(U)
    precision = np.linalg.inv(rho)
    quad = np.einsum("ni,ij,nj->n", z, precision - np.eye(rho.shape[0]), z)
    return np.exp(-0.5 * quad) / np.sqrt(np.linalg.det(rho))


def _fgm_conditional_inverse(u, w, theta):
    # Root in [0, 1] of v + a v (1 - v) = w, a = theta (1 - 2u); the
    # rationalized form stays stable as a -> 0.
    a = theta * (1.0 - 2.0 * u)
    disc = (1.0 + a) ** 2 - 4.0 * a * w
    return 2.0 * w / ((1.0 + a) + np.sqrt(disc))


def l2_error(density_a, density_b, quadrature):
    """L2 distance between two densities on [0, 1]^d under a quadrature rule."""
    def sq_diff(points):
        a = np.asarray(density_a(points), dtype=np.float64)
        b = np.asarray(density_b(points), dtype=np.float64)
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise EvaluationError("density evaluated to a non-finite value")
        return (a - b) ** 2
    return float(np.sqrt(max(quadrature.integrate(sq_diff), 0.0)))
