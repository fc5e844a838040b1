"""Successive-constraint LP relaxation of the natural-norm surrogate.

For a control point ``mubar`` with SCM sample ``C = {mu_1, ..., mu_J}`` the
surrogate ``betabar(mu) = min_{y in Y} theta(mu).y`` is bracketed by

* ``g_lb``: the LP over the bounding box cut by the constraints
  ``theta(mu_j).y >= betabar(mu_j)`` of the ``jnb`` sample points nearest
  to ``mu``;
* ``g_ub``: the minimum of ``theta(mu).y*(mu_j)`` over the stored minimizers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import simplex
from .errors import CycleDetected, EmptySample, InfSupError, LpInfeasible
from .natural_norm import BoundingBox
from .truth import AffineOperator

UNDEFINED = float("nan")
"""Sentinel returned by :func:`epsilon_ratio` when ``|g_ub| <= 1e-14``."""


@dataclass(frozen=True)
class LinearProgram:
    """``min objective.y`` s.t. ``G y >= h`` and ``lower <= y <= upper``."""

    objective: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    G: np.ndarray = None
    h: np.ndarray = None

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        q = c.shape[0]
        lo = np.asarray(self.lower, dtype=float).reshape(q)
        hi = np.asarray(self.upper, dtype=float).reshape(q)
        g = np.zeros((0, q)) if self.G is None else np.asarray(self.G, dtype=float).reshape(-1, q)
        h = np.zeros(0) if self.h is None else np.asarray(self.h, dtype=float).reshape(-1)
        if g.shape[0] != h.shape[0]:
            raise ValueError("constraint matrix and right-hand side differ in length")
        if np.any(lo > hi):
            raise ValueError("box has lower > upper")
        for arr in (c, lo, hi, g, h):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP coefficients must be finite")
        for name, arr in (("objective", c), ("lower", lo), ("upper", hi), ("G", g), ("h", h)):
            object.__setattr__(self, name, arr)

    @property
    def nvars(self):
        return self.objective.shape[0]


@dataclass(frozen=True)
class LpSolution:
    value: float
    point: np.ndarray
    status: str
    iterations: int = 0

    @property
    def optimal(self):
        return self.status == "optimal"


def solve_lp(lp: LinearProgram) -> LpSolution:
    status, y, value, iters = simplex.solve_ge(lp.objective, lp.G, lp.h, lp.lower, lp.upper)
    if status == simplex.OPTIMAL:
        return LpSolution(float(value), y, "optimal", int(iters))
    if status == simplex.INFEASIBLE:
        return LpSolution(float("nan"), y, "infeasible", int(iters))
    if status == simplex.CYCLING:
        raise CycleDetected(f"simplex exceeded {simplex.MAX_ITER} iterations")
    raise InfSupError("simplex reported an unbounded ray inside a finite box")


@dataclass
class ScmSample:
    """The growing SCM sample of one control point.

    Per sample point ``mu_j`` it stores the surrogate value ``betabar[j]``,
    the minimizer image ``ystar[j]`` (a Q-vector) and the Q-hat vector of
    the same minimizer, used by the certified upper bound.
    """

    points: list = field(default_factory=list)
    thetas: list = field(default_factory=list)
    betabar: list = field(default_factory=list)
    ystar: list = field(default_factory=list)
    qhat_vecs: list = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    def append(self, mu, theta, betabar, ystar, qhat_vec):
        self.points.append(tuple(float(v) for v in mu))
        self.thetas.append(np.asarray(theta, dtype=float))
        self.betabar.append(float(betabar))
        self.ystar.append(np.asarray(ystar, dtype=float))
        self.qhat_vecs.append(np.asarray(qhat_vec, dtype=float))

    def arrays(self):
        """``(points, thetas, betabar, ystar)`` as stacked arrays."""
        if not self.points:
            raise EmptySample("SCM sample is empty")
        return (
            np.asarray(self.points, dtype=float),
            np.vstack(self.thetas),
            np.asarray(self.betabar, dtype=float),
            np.vstack(self.ystar),
        )


def nearest_points(sample: ScmSample, mu, jnb, scale=None):
    """Indices of the ``min(jnb, J)`` sample points closest to ``mu``.

    Distance is Euclidean in parameter coordinates, optionally divided per
    axis by ``scale``. Ties keep insertion order. ``jnb=None`` selects all.
    """
    if len(sample) == 0:
        raise EmptySample("SCM sample is empty")
    if jnb is not None and jnb < 1:
        raise ValueError("jnb must be >= 1")
    pts = np.asarray(sample.points, dtype=float)
    diff = pts - np.asarray(mu, dtype=float)
    if scale is not None:
        diff = diff / np.asarray(scale, dtype=float)
    dist = np.einsum("ij,ij->i", diff, diff)
    order = np.argsort(dist, kind="stable")
    k = len(order) if jnb is None else min(int(jnb), len(order))
    return order[:k]


def lower_bound_lp(sample: ScmSample, box: BoundingBox, op: AffineOperator, mu, jnb, scale=None):
    idx = nearest_points(sample, mu, jnb, scale)
    _, thetas, betabar, _ = sample.arrays()
    return LinearProgram(
        objective=op.coefficients(mu),
        lower=box.lower,
        upper=box.upper,
        G=thetas[idx],
        h=betabar[idx],
    )


def g_lb(sample: ScmSample, box: BoundingBox, op: AffineOperator, mu, jnb, scale=None) -> float:
    """SCM lower bound for ``betabar_mubar(mu)``."""
    sol = solve_lp(lower_bound_lp(sample, box, op, mu, jnb, scale))
    if not sol.optimal:
        raise LpInfeasible(f"lower-bound LP infeasible at mu={tuple(mu)}")
    return sol.value


def g_ub(sample: ScmSample, op: AffineOperator, mu) -> float:
    """SCM upper bound: best stored minimizer evaluated at ``mu``."""
    _, _, _, ystar = sample.arrays()
    return float(np.min(ystar @ op.coefficients(mu)))


def ratio(lb, ub):
    """``(ub - lb) / ub``; NaN where ``|ub| <= 1e-14``. Works elementwise."""
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(np.abs(ub) > 1e-14, (ub - lb) / np.where(ub == 0.0, 1.0, ub), np.nan)
    return out if out.ndim else float(out)


def epsilon_ratio(sample: ScmSample, box: BoundingBox, op: AffineOperator, mu, jnb, scale=None) -> float:
    """Quality indicator ``(g_ub - g_lb) / g_ub``; :data:`UNDEFINED` if ``g_ub ~ 0``."""
    return ratio(g_lb(sample, box, op, mu, jnb, scale), g_ub(sample, op, mu))


def neighbor_table(sample_points, train_points, jnb, scale=None):
    """Nearest-sample indices for every train point.

    Returns ``(table, counts)`` where row ``p`` of ``table`` lists the
    selected sample indices for ``train_points[p]`` (padded with -1).
    """
    sp = np.asarray(sample_points, dtype=float)
    tp = np.asarray(train_points, dtype=float)
    if scale is not None:
        sp = sp / scale
        tp = tp / scale
    dist = ((tp[:, None, :] - sp[None, :, :]) ** 2).sum(axis=2)
    order = np.argsort(dist, axis=1, kind="stable")
    k = sp.shape[0] if jnb is None else min(int(jnb), sp.shape[0])
    table = order[:, :k].astype(np.int64)
    counts = np.full(len(tp), k, dtype=np.int64)
    return table, counts


def lower_bounds_batch(thetas_train, table, counts, sample: ScmSample, box: BoundingBox):
    """Vectorized :func:`g_lb` over train points with precomputed neighbors.

    Returns ``(values, total_iterations)``. Any infeasible LP is fatal.
    """
    _, thetas, betabar, _ = sample.arrays()
    values, statuses, iters = simplex.batch_lower_bounds(
        np.ascontiguousarray(thetas_train, dtype=float),
        np.ascontiguousarray(table, dtype=np.int64),
        np.ascontiguousarray(counts, dtype=np.int64),
        np.ascontiguousarray(thetas),
        np.ascontiguousarray(betabar),
        np.ascontiguousarray(box.lower, dtype=float),
        np.ascontiguousarray(box.upper, dtype=float),
    )
    if np.any(statuses == simplex.INFEASIBLE):
        raise LpInfeasible(f"{int(np.sum(statuses == simplex.INFEASIBLE))} lower-bound LPs infeasible")
    if np.any(statuses != simplex.OPTIMAL):
        raise CycleDetected("simplex iteration cap exceeded in batch evaluation")
    return values, int(iters.sum())


def upper_bounds_batch(thetas_train, sample: ScmSample):
    _, _, _, ystar = sample.arrays()
    return (np.asarray(thetas_train) @ ystar.T).min(axis=1)
