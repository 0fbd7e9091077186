"""Monte Carlo harness: estimator error and moment error versus sample size."""
import logging
import os
import time
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .basis import KnotGrid, TensorBasis
from .exceptions import CopsplineError
from .estimator import fit_copula_density
from .moments import moment_vector, population_moments, pseudo_observations
from .penalty import BivariateMarginals

__all__ = ["ErrorRow", "MomentErrorRow", "run_benchmark", "replication_seed",
           "loglog_slope", "default_workers", "moment_error_experiment"]

logger = logging.getLogger(__name__)

THREADS_ENV = "COPSPLINE_THREADS"


@dataclass(frozen=True)
class ErrorRow:
    n: int
    lam: float
    rep: int
    l2_error: float
    runtime: float
    status: str


@dataclass(frozen=True)
class MomentErrorRow:
    n: int
    rep: int
    t: int
    sq_error: float


def replication_seed(seed, n, rep):
    """Independent stream for replication ``rep`` at sample size ``n``.

    Depends only on ``(seed, n, rep)``, so every lambda of a sweep sees the
    same data set and results do not depend on scheduling.
    """
    return np.random.SeedSequence([int(seed), int(n), int(rep)])


def default_workers():
    cap = os.environ.get(THREADS_ENV)
    workers = os.cpu_count() or 1
    if cap:
        workers = min(workers, max(1, int(cap)))
    return workers


def _grid_for(grid, n, d):
    if grid is None:
        return KnotGrid.rule_of_thumb(n, d)
    return grid if isinstance(grid, KnotGrid) else KnotGrid(tuple(grid))


def _replication(model, n, rep, seed, grid, lambdas, marginals, truth_moments):
    data = model.sample(n, seed=replication_seed(seed, n, rep))
    rows = []
    for lam in lambdas:
        start = time.perf_counter()
        try:
            est = fit_copula_density(data, grid=grid, lam=lam,
                                     marginals=marginals if lam > 0 else None)
            err, status = est.error_report(model), "ok"
        except CopsplineError as exc:
            err, status = float("nan"), "error: %s" % exc
        rows.append(ErrorRow(n, float(lam), rep, float(err),
                             time.perf_counter() - start, status))
    moment_rows = []
    if truth_moments is not None:
        m_hat = moment_vector(pseudo_observations(data), TensorBasis(grid))
        moment_rows = [MomentErrorRow(n, rep, t, float(v))
                       for t, v in enumerate((m_hat - truth_moments) ** 2)]
    return rows, moment_rows


def run_benchmark(model, ns, reps, lambdas, seed, grid=None, marginals=None,
                  moment_errors=True, n_jobs=None):
    """Full factorial sweep over sample sizes, replications and penalty weights.

    Parameters
    ----------
    model : CopulaModel
        Ground truth used both to draw data and to measure L2 error.
    ns : sequence of int
    reps : int
    lambdas : sequence of float
    seed : int
    grid : KnotGrid or sequence of int, optional
        Fixed grid; by default the rule-of-thumb grid for each ``n``.
    marginals : BivariateMarginals, optional
        Defaults to the bivariate marginals of ``model``.
    moment_errors : bool, default=True
        Also return squared errors of the empirical moments.
    n_jobs : int, optional
        Worker processes; defaults to :func:`default_workers`.

    Returns
    -------
    errors : list of ErrorRow
        Ordered by ``(n, lam, rep)``.
    moments : list of MomentErrorRow
        Ordered by ``(n, rep, t)``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if marginals is None and any(lam > 0 for lam in lambdas):
        marginals = BivariateMarginals.from_model(model)
    n_jobs = default_workers() if n_jobs is None else n_jobs
    tasks = []
    for n in ns:
        g = _grid_for(grid, n, model.d)
        truth = population_moments(model, TensorBasis(g)) if moment_errors else None
        tasks.extend((model, n, rep, seed, g, tuple(lambdas), marginals, truth)
                     for rep in range(reps))
    logger.info("benchmark: %d replications on %d workers", len(tasks), n_jobs)
    if n_jobs == 1:
        results = [_replication(*task) for task in tasks]
    else:
        results = Parallel(n_jobs=n_jobs)(delayed(_replication)(*task) for task in tasks)
    errors = sorted((row for rows, _ in results for row in rows),
                    key=lambda r: (r.n, r.lam, r.rep))
    moments = [row for _, rows in results for row in rows]
    return errors, moments


def moment_error_experiment(model, grid, ns, reps, seed, truth_moments=None):
    """Mean (over replications and basis functions) squared moment error per ``n``."""
    basis = TensorBasis(grid if isinstance(grid, KnotGrid) else KnotGrid(tuple(grid)))
    if truth_moments is None:
        truth_moments = population_moments(model, basis)
    means = []
    for n in ns:
        total = 0.0
        for rep in range(reps):
            data = model.sample(n, seed=replication_seed(seed, n, rep))
            m_hat = moment_vector(pseudo_observations(data), basis)
            total += float(np.mean((m_hat - truth_moments) ** 2))
        means.append(total / reps)
    return np.asarray(means)


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])
