"""Convex quadratic programs with equality and nonnegativity constraints.

Problems have the form::

    minimize    alpha' G alpha - 2 g' alpha + const
    subject to  E alpha = e,  alpha >= 0 (optional)

and are solved by a primal active-set method on the bound constraints.
Each iteration minimizes over the free variables in the null space of the
equality constraints. Redundant equality rows are removed first with a
column-pivoted QR factorization.

Optimality is reported through a KKT certificate with multipliers ``nu``
(equalities) and ``mu >= 0`` (bounds), using the sign convention::

    2 G alpha - 2 g + E' nu - mu = 0
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linprog, lsq_linear

from ._validation import check_coefficients
from .exceptions import DimensionError, DomainError

__all__ = ["QuadraticProgram", "KKTReport", "QpSolution", "solve", "check_kkt",
           "reduce_equalities"]

CONVERGED = "converged"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class QuadraticProgram:
    """Data of a convex QP; see the module docstring for the exact form."""

    G: np.ndarray
    g: np.ndarray
    E: np.ndarray = None
    e: np.ndarray = None
    nonneg: bool = True
    const: float = 0.0

    def __post_init__(self):
        G = np.asarray(self.G, dtype=np.float64)
        g = np.asarray(self.g, dtype=np.float64)
        if G.ndim != 2 or G.shape[0] != G.shape[1] or g.shape != (G.shape[0],):
            raise DimensionError("G must be k x k and g of length k")
        k = G.shape[0]
        if self.E is None:
            E, e = np.zeros((0, k)), np.zeros(0)
        else:
            E = np.atleast_2d(np.asarray(self.E, dtype=np.float64))
            e = np.atleast_1d(np.asarray(self.e, dtype=np.float64))
            if E.shape[1] != k or e.shape != (E.shape[0],):
                raise DimensionError("E must be p x k and e of length p")
        object.__setattr__(self, "G", 0.5 * (G + G.T))
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "e", e)

    @property
    def size(self):
        return self.G.shape[0]

    def objective(self, alpha):
        alpha = check_coefficients(alpha, self.size)
        return float(alpha @ self.G @ alpha - 2.0 * self.g @ alpha + self.const)

    def gradient(self, alpha):
        return 2.0 * (self.G @ alpha - self.g)


@dataclass
class KKTReport:
    stationarity: float
    primal_equality: float
    primal_nonneg: float
    dual_nonneg: float
    complementarity: float
    nu: np.ndarray = field(repr=False, default=None)
    mu: np.ndarray = field(repr=False, default=None)

    @property
    def max_residual(self):
        return max(self.stationarity, self.primal_equality, self.primal_nonneg,
                   self.dual_nonneg, self.complementarity)

    def ok(self, tol):
        return self.max_residual <= tol

    def to_dict(self):
        return {
            "stationarity": self.stationarity,
            "primal_equality": self.primal_equality,
            "primal_nonneg": self.primal_nonneg,
            "dual_nonneg": self.dual_nonneg,
            "complementarity": self.complementarity,
        }


@dataclass
class QpSolution:
    alpha: np.ndarray
    objective: float
    kkt: KKTReport
    iterations: int
    status: str

    @property
    def converged(self):
        return self.status == CONVERGED


def reduce_equalities(E, e, rtol=1e-10):
    """Drop linearly dependent rows of ``E alpha = e``.

    Returns the kept rows and a flag telling whether the dropped rows are
    consistent with them.
    """
    if E.shape[0] == 0:
        return E, e, True
    _, R, piv = sla.qr(E.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    norm = max(np.linalg.norm(E, 2), np.finfo(float).tiny)
    rank = int(np.sum(diag > rtol * norm))
    keep = np.sort(piv[:rank])
    E_red, e_red = E[keep], e[keep]
    x, *_ = np.linalg.lstsq(E_red, e_red, rcond=None)
    scale = max(1.0, np.abs(e).max())
    consistent = bool(np.abs(E @ x - e).max() <= 1e-9 * scale)
    return E_red, e_red, consistent


def check_kkt(qp, alpha, tol=1e-8):
    """KKT residuals of ``alpha`` with multipliers recovered by least squares.

    Bounds with ``alpha_j <= tol`` are treated as active. Multipliers come
    from an ordinary least-squares fit of the stationarity equation; if that
    yields a negative bound multiplier, the fit is redone with ``mu >= 0``.
    """
    alpha = check_coefficients(alpha, qp.size)
    k, p = qp.size, qp.E.shape[0]
    grad = qp.gradient(alpha)
    active = np.flatnonzero(alpha <= tol) if qp.nonneg else np.zeros(0, dtype=int)
    A = np.hstack([qp.E.T, -np.eye(k)[:, active]])
    if A.shape[1]:
        sol, *_ = np.linalg.lstsq(A, -grad, rcond=None)
        if np.any(sol[p:] < -tol):
            lower = np.concatenate([np.full(p, -np.inf), np.zeros(active.size)])
            sol = lsq_linear(A, -grad, bounds=(lower, np.inf), method="bvls",
                             tol=1e-14).x
        residual = grad + A @ sol
    else:
        sol, residual = np.zeros(0), grad
    nu = sol[:p]
    mu = np.zeros(k)
    mu[active] = sol[p:]
    eq = float(np.abs(qp.E @ alpha - qp.e).max()) if p else 0.0
    return KKTReport(
        stationarity=float(np.abs(residual).max()),
        primal_equality=eq,
        primal_nonneg=float(max(0.0, -alpha.min())) if qp.nonneg else 0.0,
        dual_nonneg=float(max(0.0, -mu.min())),
        complementarity=float(np.abs(mu * alpha).max()),
        nu=nu,
        mu=mu,
    )


def _check_psd(G):
    eig = np.linalg.eigvalsh(G)
    norm = max(np.abs(eig).max(), np.finfo(float).tiny)
    if eig.min() < -1e-8 * norm:
        raise DomainError("G is not positive semidefinite (min eigenvalue %.3e)" % eig.min())
    return norm


def _feasible_start(E, e, k, tol):
    if E.shape[0] == 0:
        return np.zeros(k)
    res = linprog(np.zeros(k), A_eq=E, b_eq=e, bounds=(0, None), method="highs")
    if res.status != 0:
        return None
    return np.maximum(res.x, 0.0)


def _subspace_step(H, grad, E, free, hess_scale):
    """Minimizer step over the free variables in the null space of ``E``.

    Returns ``(p, unbounded_direction)``: a Newton step, or a descent
    direction of zero curvature when the reduced Hessian is singular along
    the gradient.
    """
    k = H.shape[0]
    p = np.zeros(k)
    if free.size == 0:
        return p, False
    E_F = E[:, free]
    Z = sla.null_space(E_F, rcond=1e-12) if E_F.shape[0] else np.eye(free.size)
    if Z.shape[1] == 0:
        return p, False
    Hz = Z.T @ H[np.ix_(free, free)] @ Z
    rhs = -Z.T @ grad[free]
    lam, V = np.linalg.eigh(0.5 * (Hz + Hz.T))
    flat = lam <= 1e-12 * hess_scale
    coef = V.T @ rhs
    grad_scale = max(np.abs(grad).max(), 1.0)
    if np.any(flat) and np.abs(coef[flat]).max() > 1e-12 * grad_scale:
        p[free] = Z @ (V[:, flat] @ coef[flat])
        return p, True
    y = V[:, ~flat] @ (coef[~flat] / lam[~flat])
    p[free] = Z @ y
    return p, False


def solve(qp, tol=1e-8, max_iter=None, x0=None):
    """Minimize a convex :class:`QuadraticProgram`.

    Parameters
    ----------
    qp : QuadraticProgram
    tol : float, default=1e-8
        Target for every KKT residual.
    max_iter : int, optional
        Defaults to ``50 * k``.
    x0 : array-like, optional
        Feasible starting point. Without one, a vertex of the feasible set
        is found by linear programming.

    Returns
    -------
    QpSolution
    """
    k = qp.size
    max_iter = 50 * k if max_iter is None else int(max_iter)
    hess_scale = 2.0 * _check_psd(qp.G)
    H = 2.0 * qp.G
    E, e, consistent = reduce_equalities(qp.E, qp.e)

    def finish(x, iterations, status):
        return QpSolution(alpha=x, objective=qp.objective(x), kkt=check_kkt(qp, x, tol),
                          iterations=iterations, status=status)

    if not consistent:
        return finish(np.zeros(k), 0, INFEASIBLE)
    if x0 is not None:
        x = check_coefficients(x0, k).copy()
        if (qp.nonneg and x.min() < -tol) or (E.shape[0] and np.abs(E @ x - e).max() > tol):
            raise DomainError("starting point is not feasible")
        if qp.nonneg:
            x = np.maximum(x, 0.0)
    elif qp.nonneg:
        x = _feasible_start(E, e, k, tol)
        if x is None:
            return finish(np.zeros(k), 0, INFEASIBLE)
    else:
        x = np.linalg.lstsq(E, e, rcond=None)[0] if E.shape[0] else np.zeros(k)

    working = np.zeros(k, dtype=bool)
    at_minimum = False
    iterations = 0
    while iterations < max_iter:
        iterations += 1
        free = np.flatnonzero(~working)
        grad = H @ x - 2.0 * qp.g
        if not at_minimum:
            p, unbounded = _subspace_step(H, grad, E, free, hess_scale)
            if unbounded or np.abs(p).max() > 1e-12 * max(1.0, np.abs(x).max()):
                step, blocking = (np.inf if unbounded else 1.0), -1
                if qp.nonneg:
                    decreasing = free[p[free] < 0.0]
                    if decreasing.size:
                        ratios = -x[decreasing] / p[decreasing]
                        j = int(np.argmin(ratios))
                        if ratios[j] < step:
                            step, blocking = max(ratios[j], 0.0), int(decreasing[j])
                if not np.isfinite(step):
                    return finish(x, iterations, UNBOUNDED)
                x = x + step * p
                if blocking >= 0:
                    working[blocking] = True
                    x[blocking] = 0.0
                else:
                    at_minimum = True
                continue
        fixed = np.flatnonzero(working)
        if fixed.size == 0:
            return finish(_polish(x, E, e, working), iterations, CONVERGED)
        if E.shape[0] and free.size:
            nu = np.linalg.lstsq(E[:, free].T, -grad[free], rcond=None)[0]
        else:
            nu = np.zeros(E.shape[0])
        mu = grad[fixed] + E[:, fixed].T @ nu
        if mu.min() >= -0.5 * tol:
            return finish(_polish(x, E, e, working), iterations, CONVERGED)
        # argmin picks the lowest index among ties
        working[fixed[np.argmin(mu)]] = False
        at_minimum = False
    return finish(x, iterations, MAX_ITER)


def _polish(x, E, e, working):
    """Remove equality drift by a minimum-norm correction on the free variables."""
    if E.shape[0] == 0:
        return x
    free = np.flatnonzero(~working)
    r = E @ x - e
    if free.size == 0 or np.abs(r).max() == 0.0:
        return x
    delta = np.linalg.lstsq(E[:, free], r, rcond=None)[0]
    candidate = x.copy()
    candidate[free] -= delta
    if candidate[free].min() >= 0.0 or candidate[free].min() >= x[free].min():
        return candidate
    return x
