"""Natural-norm SCM greedy (NNSCM) and its certified multi-round variant.

One *round* covers the train set with subdomains: starting from a control
point, the inner greedy grows the SCM sample until the positivity set stops
growing and the ratio indicator meets ``eps_betabar``; covered points are
pruned and the next control point is the most negative lower bound left.
cNNSCM repeats rounds, restarting from the train point with the worst
global gap, until ``(ub - lb) / ub <= eps_g`` on the whole train set.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .certification import BoundRegistry, GridBounds, Subdomain, qhat_vector
from .errors import NoProgress, RoundCapExceeded
from .natural_norm import (
    beta_bar,
    build_control_point,
    build_supremizers,
    gamma_q,
    y_of_w,
)
from .scm import ScmSample, lower_bounds_batch, neighbor_table, ratio
from .truth import AffineOperator, TrainSample

log = logging.getLogger("infsup")


def _fmt_mu(mu):
    return "(" + ", ".join(f"{float(v):.6g}" for v in mu) + ")"


def zero_phi(mu, mubar):
    return 0.0


@dataclass
class GreedyConfig:
    eps_betabar: float = 0.8
    eps_g: float = 0.8
    jnb: int | None = 8
    phi: Callable = zero_phi
    max_rounds: int = 20
    max_points_per_subdomain: int = 200
    rng_seed: int | None = None
    normalize_metric: bool = False

    def __post_init__(self):
        for name in ("eps_betabar", "eps_g"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.jnb is not None and self.jnb < 1:
            raise ValueError("jnb must be >= 1")
        if self.max_rounds < 1 or self.max_points_per_subdomain < 1:
            raise ValueError("safety caps must be >= 1")


@dataclass
class SubdomainResult:
    """A finished subdomain plus its train-grid bookkeeping."""

    subdomain: Subdomain
    sample_indices: list
    lb: np.ndarray
    ub: np.ndarray
    covered: np.ndarray
    eps_max: float
    coverage_history: list
    capped: bool
    lp_iterations: int


@dataclass
class RoundState:
    """Control points of one round and the pruned copy of the train set."""

    round: int
    control_points: list = field(default_factory=list)
    pruned_xi: TrainSample = None
    subdomains: list = field(default_factory=list)


@dataclass
class RunReport:
    algorithm: str
    rounds: list = field(default_factory=list)
    converged: bool = False
    final_max_eps: float = float("nan")
    timings: dict = field(default_factory=dict)
    lp_solves: int = 0
    lp_iterations: int = 0
    lp_infeasible: int = 0
    snapshots: list = field(default_factory=list, repr=False)
    grid: GridBounds | None = field(default=None, repr=False)

    def to_dict(self):
        return {
            "algorithm": self.algorithm,
            "converged": self.converged,
            "final_max_eps": self.final_max_eps,
            "rounds": self.rounds,
            "lp": {
                "solves": self.lp_solves,
                "iterations": self.lp_iterations,
                "infeasible": self.lp_infeasible,
            },
            "timings": self.timings,
        }


class ScmContext:
    """Operator-level data shared by every subdomain of a run."""

    def __init__(self, op: AffineOperator, xi: TrainSample, cfg: GreedyConfig):
        self.op = op
        self.xi = xi
        self.cfg = cfg
        self.sup = build_supremizers(op)
        self.gamma = tuple(gamma_q(self.sup))
        self.points = xi.points
        self.thetas = op.coefficients_many(self.points)
        self.scale = op.domain.widths if cfg.normalize_metric else None
        if self.scale is not None:
            self.scale = np.where(self.scale > 0.0, self.scale, 1.0)
        self.lp_solves = 0
        self.lp_iterations = 0

    def initial_index(self):
        """Seeded random train point, or the point nearest the domain centre."""
        if self.cfg.rng_seed is not None:
            rng = np.random.default_rng(self.cfg.rng_seed)
            return int(rng.integers(len(self.points)))
        centre = 0.5 * (np.asarray(self.op.domain.lo) + np.asarray(self.op.domain.hi))
        return int(np.argmin(((self.points - centre) ** 2).sum(axis=1)))


def inner_greedy(ctx: ScmContext, mubar_index: int, active, phi=None, round_no=1) -> SubdomainResult:
    """Grow the SCM sample of one control point.

    ``active`` flags the train points still in the pruned set. Lower and
    upper bounds are tracked on the whole train grid; a point's LP is
    re-solved only when its set of nearest sample points changes.
    """
    cfg = ctx.cfg
    phi = cfg.phi if phi is None else phi
    op, sup = ctx.op, ctx.sup
    mubar = ctx.points[mubar_index]
    cp = build_control_point(sup, mubar)
    sub = Subdomain(tuple(mubar), cp.beta_exact, ctx.gamma, ScmSample(), round_no)
    box = sub.box
    active = np.asarray(active, dtype=bool)
    n_active = int(active.sum())
    phis = np.array([phi(mu, mubar) for mu in ctx.points]) if phi is not zero_phi else np.zeros(len(ctx.points))

    lb = np.full(len(ctx.points), np.nan)
    ub = np.full(len(ctx.points), np.inf)
    table = None
    in_sample = np.zeros(len(ctx.points), dtype=bool)
    sample_indices = []
    covered = np.zeros(len(ctx.points), dtype=bool)
    prev_covered = covered
    eps_max = np.inf
    history = []
    capped = False
    lp_iters = 0

    while np.any(covered & ~prev_covered) or eps_max > cfg.eps_betabar or not sample_indices:
        if len(sample_indices) >= cfg.max_points_per_subdomain:
            capped = True
            log.warning(
                "subdomain at %s hit max_points_per_subdomain=%d (eps_max=%.4g)",
                _fmt_mu(mubar), cfg.max_points_per_subdomain, eps_max,
            )
            break
        if not sample_indices:
            new = mubar_index
        else:
            eps = ratio(lb, ub)
            cand = active & ~in_sample & np.isfinite(eps)
            if not np.any(cand):
                break
            new = int(np.flatnonzero(cand)[np.argmax(eps[cand])])

        mu_new = ctx.points[new]
        if new == mubar_index:
            bb, _ = beta_bar(cp, sup, mu_new)
            w = cp.w_beta
        else:
            bb, w = beta_bar(cp, sup, mu_new)
        sub.sample.append(mu_new, ctx.thetas[new], bb, y_of_w(cp, sup, w), qhat_vector(sup, w))
        sample_indices.append(new)
        in_sample[new] = True

        new_table, counts = neighbor_table(sub.sample.points, ctx.points, cfg.jnb, ctx.scale)
        if table is None or table.shape != new_table.shape:
            changed = np.ones(len(ctx.points), dtype=bool)
        else:
            changed = np.any(np.sort(new_table, axis=1) != np.sort(table, axis=1), axis=1)
        table = new_table
        idx = np.flatnonzero(changed)
        if idx.size:
            vals, iters = lower_bounds_batch(ctx.thetas[idx], table[idx], counts[idx], sub.sample, box)
            lb[idx] = vals
            lp_iters += iters
            ctx.lp_solves += idx.size
        ub = np.minimum(ub, ctx.thetas @ sub.sample.ystar[-1])

        prev_covered = covered
        covered = active & (lb > phis)
        eps = ratio(lb, ub)
        sel = active & (ub > 1e-14)
        eps_max = float(np.nanmax(eps[sel])) if np.any(sel) else -np.inf
        history.append(int(covered.sum()))
        log.debug(
            "  subdomain %s: J=%d covered=%d/%d eps_max=%.4g",
            _fmt_mu(mubar), len(sample_indices), history[-1], n_active, eps_max,
        )
        if covered.sum() == n_active:
            break

    ctx.lp_iterations += lp_iters
    if not covered.any():
        raise NoProgress(f"control point {tuple(mubar)} covers no train point")
    return SubdomainResult(
        subdomain=sub,
        sample_indices=sample_indices,
        lb=lb,
        ub=ub,
        covered=covered,
        eps_max=eps_max,
        coverage_history=history,
        capped=capped,
        lp_iterations=lp_iters,
    )


def run_round(ctx: ScmContext, first_index: int, round_no: int, phi=None) -> RoundState:
    """Cover the whole train set once, pruning after each subdomain."""
    state = RoundState(round=round_no, pruned_xi=ctx.xi.copy())
    state.pruned_xi.reset()
    current = first_index
    while True:
        state.control_points.append(tuple(ctx.points[current]))
        res = inner_greedy(ctx, current, state.pruned_xi.active, phi=phi, round_no=round_no)
        state.subdomains.append(res)
        state.pruned_xi.prune(np.flatnonzero(res.covered))
        remaining = state.pruned_xi.active_indices
        log.info(
            "round %d subdomain %d at %s: J=%d eps_max=%.4g remaining=%d",
            round_no, len(state.subdomains), _fmt_mu(ctx.points[current]),
            len(res.sample_indices), res.eps_max, remaining.size,
        )
        if remaining.size == 0:
            return state
        current = int(remaining[np.argmin(res.lb[remaining])])


def _round_summary(state: RoundState, eps_grid):
    return {
        "round": state.round,
        "control_points": [list(p) for p in state.control_points],
        "sample_sizes": [len(r.sample_indices) for r in state.subdomains],
        "subdomain_eps_max": [r.eps_max for r in state.subdomains],
        "capped_subdomains": int(sum(r.capped for r in state.subdomains)),
        "max_eps": float(np.max(eps_grid)),
    }


def _run(op, xi, cfg, algorithm):
    t0 = time.perf_counter()
    ctx = ScmContext(op, xi, cfg)
    registry = BoundRegistry(
        jnb=cfg.jnb,
        metric_scale=None if ctx.scale is None else tuple(float(s) for s in ctx.scale),
        problem=op.name,
    )
    report = RunReport(algorithm=algorithm)
    grid = GridBounds(op, ctx.points, cfg.jnb, ctx.scale)
    # The certified variant always covers on "lb > 0"; phi is an NNSCM knob.
    phi = cfg.phi if algorithm == "nnscm" else zero_phi
    first = ctx.initial_index()
    round_no = 1
    while True:
        state = run_round(ctx, first, round_no, phi=phi)
        for res in state.subdomains:
            registry.append(res.subdomain)
            grid.add(res.subdomain, lb_values=res.subdomain.beta * res.lb)
        eps = grid.eps
        report.rounds.append(_round_summary(state, eps))
        report.snapshots.append((grid.lb.copy(), grid.ub.copy()))
        log.info("round %d done: %d control points, max eps %.6g", round_no, len(state.subdomains), eps.max())
        if algorithm == "nnscm" or eps.max() <= cfg.eps_g:
            report.converged = bool(algorithm == "nnscm" or eps.max() <= cfg.eps_g)
            break
        if round_no >= cfg.max_rounds:
            report.converged = False
            break
        first = int(np.argmax(eps))
        round_no += 1
    report.final_max_eps = float(grid.eps.max())
    report.lp_solves = ctx.lp_solves
    report.lp_iterations = ctx.lp_iterations
    report.timings["total_seconds"] = time.perf_counter() - t0
    report.grid = grid
    if not report.converged:
        raise RoundCapExceeded(
            f"max eps {report.final_max_eps:.6g} > eps_g after {round_no} rounds",
            registry=registry,
            report=report,
        )
    return registry, report


def run_nnscm(op: AffineOperator, xi: TrainSample, cfg: GreedyConfig):
    """Single-round natural-norm SCM."""
    return _run(op, xi, cfg, "nnscm")


def run_cnnscm(op: AffineOperator, xi: TrainSample, cfg: GreedyConfig):
    """Certified multi-round natural-norm SCM."""
    return _run(op, xi, cfg, "cnnscm")
