"""Brute-force reference computations.

These deliberately avoid the production code paths: LPs are solved by
enumerating vertices, inf-sup constants by a full SVD of the directly
assembled operator, and the natural-norm surrogate is probed with random
Rayleigh quotients built from explicit matrices. They are slow by design
and exist to cross-check results, in tests and in ``infsup validate``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import TooLarge


@dataclass(frozen=True)
class OracleResult:
    value: float
    witness: object
    method: str


def lp_vertex_oracle(lp, tol=1e-9):
    """Minimize over every vertex of ``{G y >= h, lower <= y <= upper}``.

    The value is ``nan`` (and the witness ``None``) when no vertex is
    feasible, i.e. the polytope is empty.
    """
    q = lp.nvars
    m = lp.G.shape[0]
    if q > 5 or m > 12:
        raise TooLarge(f"vertex enumeration limited to Q<=5, m<=12 (got Q={q}, m={m})")
    rows = [(lp.G[i], lp.h[i]) for i in range(m)]
    for j in range(q):
        e = np.zeros(q)
        e[j] = 1.0
        rows.append((e, lp.lower[j]))
        rows.append((e, lp.upper[j]))
    best, witness = np.inf, None
    for combo in itertools.combinations(range(len(rows)), q):
        mat = np.array([rows[k][0] for k in combo])
        rhs = np.array([rows[k][1] for k in combo])
        if abs(np.linalg.det(mat)) < 1e-12:
            continue
        y = np.linalg.solve(mat, rhs)
        slack = tol * (1.0 + np.abs(lp.h))
        if np.any(lp.G @ y < lp.h - slack):
            continue
        if np.any(y < lp.lower - tol * (1 + np.abs(lp.lower))) or np.any(y > lp.upper + tol * (1 + np.abs(lp.upper))):
            continue
        val = float(lp.objective @ y)
        if val < best:
            best, witness = val, y
    if witness is None:
        return OracleResult(float("nan"), None, "vertex-enumeration:infeasible")
    return OracleResult(best, witness, "vertex-enumeration")


def direct_operator(op, mu):
    """``A(mu)`` assembled without the affine split when the operator allows it."""
    if op.direct is not None:
        return np.asarray(op.direct(np.asarray(mu, dtype=float)), dtype=float)
    return op.assemble(mu)


def beta_bruteforce(op, mu):
    """Smallest singular value of ``L^{-1} A(mu) L^{-T}`` with ``L L' = X``."""
    n = op.size
    if n > 1200:
        raise TooLarge(f"beta_bruteforce limited to N <= 1200 (got {n})")
    a = direct_operator(op, mu)
    lower = np.linalg.cholesky(op.xmat)
    whitened = np.linalg.solve(lower, np.linalg.solve(lower, a.T).T)
    _, s, vt = np.linalg.svd(whitened)
    w = np.linalg.solve(lower.T, vt[-1])
    return OracleResult(float(s[-1]), w, "svd")


def rayleigh_quotients(op, mubar, mu, ws):
    """``a(w, T w; mu) / ||T w||_X^2`` with ``T = X^{-1} A(mubar)``, one per column of ``ws``."""
    tbar = np.linalg.solve(op.xmat, direct_operator(op, mubar))
    tw = tbar @ ws
    num = np.einsum("ij,ij->j", tw, direct_operator(op, mu) @ ws)
    den = np.einsum("ij,ij->j", tw, op.xmat @ tw)
    return num / den


def rayleigh_sampler(cp, op, mu, samples, seed=0, w=None):
    """Minimum sampled quotient of the natural-norm surrogate at ``mu``.

    Always an upper bound for ``betabar_mubar(mu)``. When ``w`` is given
    it is used as the first sample.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    ws = rng.standard_normal((op.size, samples))
    if w is not None:
        ws[:, 0] = w
    q = rayleigh_quotients(op, cp.mubar, mu, ws)
    k = int(np.argmin(q))
    return OracleResult(float(q[k]), ws[:, k], "random-rayleigh")
