"""Certified upper bound and global lower/upper bounds for beta(mu).

Squaring the supremizer gives ``||T^mu w||^2 = sum theta_hat(mu) . z(w)``
with ``Qhat = Q(Q+1)/2`` products ``(2 - delta) theta_q' theta_q''`` and
cross inner products ``z = (T_q' w, T_q'' w)_X / ||w||_X^2``. Evaluating
that identity at the stored natural-norm minimizers gives an upper bound
for ``beta(mu)^2`` at the cost of one Qhat-length dot product per
candidate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from .errors import DegenerateVector, EmptySample, NegativeRadicand, NonpositiveUpperBound
from .natural_norm import BoundingBox, SupremizerSet
from .scm import ScmSample, g_lb, lower_bounds_batch, neighbor_table, ratio
from .truth import AffineOperator

REGISTRY_SCHEMA = "infsup.registry/1"


@dataclass(frozen=True)
class QhatExpansion:
    q: int

    @property
    def qhat(self):
        return self.q * (self.q + 1) // 2

    @property
    def index_pairs(self):
        return list(combinations_with_replacement(range(self.q), 2))


def theta_hat_from_theta(theta):
    """Qhat coefficients from one (Q,) or many (P, Q) theta vectors."""
    theta = np.asarray(theta, dtype=float)
    q = theta.shape[-1]
    pairs = QhatExpansion(q).index_pairs
    i = np.array([p[0] for p in pairs])
    j = np.array([p[1] for p in pairs])
    weight = np.where(i == j, 1.0, 2.0)
    return weight * theta[..., i] * theta[..., j]


def theta_hat(op: AffineOperator, mu):
    return theta_hat_from_theta(op.coefficients(mu))


def qhat_vector(sup: SupremizerSet, w):
    """Normalized cross inner products ``(T_q' w, T_q'' w)_X / ||w||_X^2``."""
    w = np.asarray(w, dtype=float)
    norm = sup.x_norm(w)
    if norm <= 1e-14:
        raise DegenerateVector("||w||_X vanishes")
    images = [t @ w for t in sup.whitened]
    pairs = QhatExpansion(len(images)).index_pairs
    return np.array([float(images[a] @ images[b]) for a, b in pairs]) / norm**2


def _radicand(zs, thetahat):
    zs = np.atleast_2d(zs)
    thetahat = np.atleast_2d(thetahat)
    vals = thetahat @ zs.T
    best = vals.min(axis=1)
    scale = (np.abs(thetahat) @ np.abs(zs).T).max(axis=1)
    if np.any(best < -1e-10 * scale):
        raise NegativeRadicand(f"upper-bound radicand {best.min():.3e} below roundoff")
    return np.maximum(best, 0.0)


def beta_ub_local(cands, op: AffineOperator, mu) -> float:
    """``sqrt(min_z theta_hat(mu) . z)`` over the Qhat vectors ``cands``."""
    cands = np.asarray(cands, dtype=float)
    if cands.size == 0:
        raise EmptySample("no upper-bound candidates")
    return float(np.sqrt(_radicand(cands, theta_hat(op, mu))[0]))


@dataclass
class Subdomain:
    """A completed control point with its SCM sample."""

    mubar: tuple
    beta: float
    gamma_q: tuple
    sample: ScmSample
    round: int = 1

    @property
    def box(self):
        return BoundingBox(tuple(self.gamma_q), self.beta)

    @property
    def qhat_matrix(self):
        return np.vstack(self.sample.qhat_vecs)


@dataclass
class BoundRegistry:
    """All subdomains produced so far, across every cNNSCM round."""

    jnb: int | None = 8
    metric_scale: tuple | None = None
    problem: str = ""
    subdomains: list = field(default_factory=list)

    def __len__(self):
        return len(self.subdomains)

    def append(self, sub: Subdomain):
        if not sub.beta > 0.0:
            raise ValueError("subdomain beta(mubar) must be positive")
        self.subdomains.append(sub)

    @property
    def scale(self):
        return None if self.metric_scale is None else np.asarray(self.metric_scale, dtype=float)

    def to_dict(self):
        subs = []
        for s in self.subdomains:
            subs.append(
                {
                    "round": s.round,
                    "mubar": list(s.mubar),
                    "beta": s.beta,
                    "gamma_q": list(s.gamma_q),
                    "points": [list(p) for p in s.sample.points],
                    "betabar": list(s.sample.betabar),
                    "ystar": [y.tolist() for y in s.sample.ystar],
                    "qhat": [z.tolist() for z in s.sample.qhat_vecs],
                }
            )
        return {
            "schema": REGISTRY_SCHEMA,
            "problem": self.problem,
            "jnb": self.jnb,
            "metric_scale": None if self.metric_scale is None else list(self.metric_scale),
            "subdomains": subs,
        }

    def dumps(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data, op: AffineOperator):
        if data.get("schema") != REGISTRY_SCHEMA:
            raise ValueError(f"unsupported registry schema {data.get('schema')!r}")
        reg = cls(
            jnb=data["jnb"],
            metric_scale=None if data["metric_scale"] is None else tuple(data["metric_scale"]),
            problem=data.get("problem", ""),
        )
        for s in data["subdomains"]:
            sample = ScmSample()
            for mu, bb, y, z in zip(s["points"], s["betabar"], s["ystar"], s["qhat"]):
                sample.append(mu, op.coefficients(mu), bb, y, z)
            reg.append(
                Subdomain(
                    mubar=tuple(s["mubar"]),
                    beta=float(s["beta"]),
                    gamma_q=tuple(s["gamma_q"]),
                    sample=sample,
                    round=int(s["round"]),
                )
            )
        return reg


def _require(reg):
    if not reg.subdomains:
        raise EmptySample("bound registry is empty")


def global_lb(reg: BoundRegistry, op: AffineOperator, mu, jnb="registry") -> float:
    """``max_k beta(mubar_k) g_lb_k(mu)`` over every registered subdomain."""
    _require(reg)
    jnb = reg.jnb if jnb == "registry" else jnb
    return max(s.beta * g_lb(s.sample, s.box, op, mu, jnb, reg.scale) for s in reg.subdomains)


def global_ub(reg: BoundRegistry, op: AffineOperator, mu) -> float:
    """``min_k beta_ub_local(mu; mubar_k)``."""
    _require(reg)
    return min(beta_ub_local(s.qhat_matrix, op, mu) for s in reg.subdomains)


def epsilon_global(reg: BoundRegistry, op: AffineOperator, mu, jnb="registry") -> float:
    ub = global_ub(reg, op, mu)
    if not ub > 0.0:
        raise NonpositiveUpperBound(f"beta_UB({tuple(mu)}) = {ub:.3e}")
    return (ub - global_lb(reg, op, mu, jnb)) / ub


def subdomain_lb_on(sub: Subdomain, thetas, points, jnb, scale=None):
    """``beta(mubar) * g_lb`` for one subdomain on many points; also LP iterations."""
    table, counts = neighbor_table(sub.sample.points, points, jnb, scale)
    vals, iters = lower_bounds_batch(thetas, table, counts, sub.sample, sub.box)
    return sub.beta * vals, iters


def subdomain_ub_on(sub: Subdomain, thetahat):
    return np.sqrt(_radicand(sub.qhat_matrix, thetahat))


class GridBounds:
    """Running global bounds of a registry on a fixed point set.

    Appending a subdomain updates the pointwise max of the lower bound and
    the pointwise min of the upper bound, so each subdomain is evaluated on
    the grid exactly once.
    """

    def __init__(self, op: AffineOperator, points, jnb, scale=None):
        self.points = np.asarray(points, dtype=float)
        self.thetas = op.coefficients_many(self.points)
        self.thetahat = theta_hat_from_theta(self.thetas)
        self.jnb = jnb
        self.scale = scale
        self.lb = np.full(len(self.points), -np.inf)
        self.ub = np.full(len(self.points), np.inf)
        self.owner = np.full(len(self.points), -1, dtype=np.int64)
        self.count = 0
        self.lp_iterations = 0

    def add(self, sub: Subdomain, lb_values=None):
        if lb_values is None:
            lb_values, iters = subdomain_lb_on(sub, self.thetas, self.points, self.jnb, self.scale)
            self.lp_iterations += iters
        better = lb_values > self.lb
        self.owner[better] = self.count
        self.lb = np.where(better, lb_values, self.lb)
        self.ub = np.minimum(self.ub, subdomain_ub_on(sub, self.thetahat))
        self.count += 1

    @classmethod
    def from_registry(cls, reg: BoundRegistry, op: AffineOperator, points):
        gb = cls(op, points, reg.jnb, reg.scale)
        for s in reg.subdomains:
            gb.add(s)
        return gb

    @property
    def eps(self):
        if np.any(self.ub <= 0.0):
            raise NonpositiveUpperBound("global upper bound is not positive on the grid")
        return ratio(self.lb, self.ub)
