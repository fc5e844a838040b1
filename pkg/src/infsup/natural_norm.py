"""Supremizers, exact inf-sup constants and the natural-norm surrogate.

With ``X = Lx Lx'`` and ``a(w, v; mu) = v' A(mu) w`` the supremizer is
``T = X^{-1} A`` and ``||T w||_X = ||Lx^{-1} A w||``. All computations are
carried out on the whitened terms ``Lx^{-1} A_q`` so that no matrix is ever
squared explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ControlPointDegenerate, DegenerateVector
from .linalg import (
    SymmetricPencil,
    extreme_symmetric_eigenpair,
    largest_eigenpair,
    smallest_singular_triplet,
    solve_linear,
    symmetrize,
)
from .truth import AffineOperator


@dataclass(frozen=True)
class SupremizerSet:
    """``T_q = X^{-1} A_q`` for every affine term.

    ``whitened[q]`` holds ``Lx^{-1} A_q``; it is what the evaluators use.
    """

    op: AffineOperator
    tq: tuple
    whitened: tuple

    def assemble_whitened(self, mu):
        coeffs = self.op.coefficients(mu)
        out = np.zeros_like(self.whitened[0])
        for c, t in zip(coeffs, self.whitened):
            out += c * t
        return out

    def x_norm(self, w):
        if self.op.x_is_identity:
            return float(np.linalg.norm(w))
        return float(np.linalg.norm(self.op.xfactor.T @ w))


def build_supremizers(op: AffineOperator) -> SupremizerSet:
    if op.x_is_identity:
        tq = tuple(t.copy() for t in op.terms)
        whitened = tq
    else:
        tq = tuple(solve_linear(op.xmat, t) for t in op.terms)
        whitened = tuple(
            sla.solve_triangular(op.xfactor, t, lower=True, check_finite=False)
            for t in op.terms
        )
    return SupremizerSet(op=op, tq=tq, whitened=whitened)


def _to_whitened_basis(op, matrix):
    # Lx^{-1} M Lx^{-T}: the operator seen in X-orthonormal coordinates.
    if op.x_is_identity:
        return matrix
    return sla.solve_triangular(op.xfactor, matrix.T, lower=True, check_finite=False).T


def beta_exact_pair(sup: SupremizerSet, mu):
    """``(beta(mu), w)`` with ``w`` an X-normalized minimizer of ``||T w||/||w||``."""
    op = sup.op
    ahat = _to_whitened_basis(op, sup.assemble_whitened(mu))
    beta, v = smallest_singular_triplet(ahat)
    if op.x_is_identity:
        w = v
    else:
        w = sla.solve_triangular(op.xfactor.T, v, lower=False, check_finite=False)
    return beta, w


def beta_exact(sup: SupremizerSet, mu) -> float:
    """Exact truth inf-sup constant ``inf_w ||T^mu w||_X / ||w||_X``."""
    return beta_exact_pair(sup, mu)[0]


def gamma_q(sup: SupremizerSet):
    """Continuity constants ``sup_w ||T_q w||_X / ||w||_X`` for each term."""
    out = []
    for t in sup.whitened:
        if sup.op.x_is_identity:
            # Largest singular value; the squared pencil is accurate at the top.
            lam, _ = extreme_symmetric_eigenpair(t.T @ t, "max")
        else:
            lam = largest_eigenpair(SymmetricPencil(symmetrize(t.T @ t), sup.op.xmat)).eigenvalue
        out.append(float(np.sqrt(max(lam, 0.0))))
    return out


@dataclass(frozen=True)
class BoundingBox:
    """Per-coordinate box ``|y_q| <= gamma_q / beta(mubar)``."""

    gamma_q: tuple
    beta_ref: float

    @property
    def upper(self):
        return np.asarray(self.gamma_q) / self.beta_ref

    @property
    def lower(self):
        return -self.upper


@dataclass(frozen=True)
class ControlPointData:
    """Everything anchored at a control point ``mubar``.

    The gram ``G = (T^mubar)' X T^mubar`` is never formed explicitly: with
    ``Lx^{-1} A(mubar) = Q R`` we have ``G = R' R``, so ``R'`` is its
    Cholesky factor (diagonal made positive) and ``Q`` has orthonormal
    columns. ``w_beta`` is an X-normalized minimizer for ``beta(mubar)``.
    """

    mubar: tuple
    beta_exact: float
    w_beta: np.ndarray
    abar: np.ndarray
    qfac: np.ndarray
    rfac: np.ndarray
    coeffs: np.ndarray

    @property
    def gram(self):
        return self.rfac.T @ self.rfac

    def tbar(self, op: AffineOperator):
        return solve_linear(op.xmat, op.assemble(self.mubar))


def build_control_point(sup: SupremizerSet, mubar) -> ControlPointData:
    mubar = tuple(float(v) for v in mubar)
    beta, w = beta_exact_pair(sup, mubar)
    if not beta > 0.0:
        raise ControlPointDegenerate(f"beta({mubar}) = {beta:.3e} is not positive")
    abar = sup.assemble_whitened(mubar)
    q, r = np.linalg.qr(abar)
    signs = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    q = q * signs
    r = signs[:, None] * r
    diag = np.diag(r)
    if diag.min() <= 1e-14 * max(diag.max(), np.finfo(float).tiny):
        raise ControlPointDegenerate(f"natural-norm gram at {mubar} is not SPD")
    return ControlPointData(
        mubar=mubar,
        beta_exact=beta,
        w_beta=w / sup.x_norm(w),
        abar=abar,
        qfac=q,
        rfac=r,
        coeffs=sup.op.coefficients(mubar),
    )


def beta_bar(cp: ControlPointData, sup: SupremizerSet, mu):
    """Natural-norm surrogate ``inf_w a(w, T w; mu) / ||T w||_X^2`` with ``T = T^mubar``.

    Returns the minimal value and a minimizer ``w`` normalized so that
    ``||T^mubar w||_X = 1``. The generalized problem is solved in the
    coordinates ``v = R w``, where it reads ``(I + sym(Q' dA R^{-1})) v =
    lambda v`` with ``dA`` the whitened operator increment from ``mubar`` to
    ``mu``. At ``mu = mubar`` the increment is exactly zero.
    """
    delta = sup.op.coefficients(mu) - cp.coeffs
    inc = np.zeros_like(cp.abar)
    for c, t in zip(delta, sup.whitened):
        if c != 0.0:
            inc += c * t
    k = cp.qfac.T @ inc
    # k R^{-1} = (R^{-T} k')'
    m = sla.solve_triangular(cp.rfac, k.T, trans="T", lower=False, check_finite=False).T
    m = symmetrize(m)
    m[np.diag_indices_from(m)] += 1.0
    lam, v = extreme_symmetric_eigenpair(m, "min")
    w = sla.solve_triangular(cp.rfac, v, lower=False, check_finite=False)
    return lam, w


def y_of_w(cp: ControlPointData, sup: SupremizerSet, w):
    """Map ``w`` to ``y_q = a_q(w, T w) / ||T w||_X^2`` with ``T = T^mubar``."""
    w = np.asarray(w, dtype=float)
    u = cp.abar @ w
    unorm2 = float(u @ u)
    if np.sqrt(unorm2) <= 1e-14 * sup.x_norm(w):
        raise DegenerateVector("||T^mubar w||_X vanishes")
    return np.array([float(u @ (t @ w)) for t in sup.whitened]) / unorm2


def rayleigh_quotient(cp: ControlPointData, sup: SupremizerSet, mu, w):
    """``a(w, T^mubar w; mu) / ||T^mubar w||_X^2`` for a single ``w``."""
    return float(sup.op.coefficients(mu) @ y_of_w(cp, sup, w))


__all__ = [
    "BoundingBox",
    "ControlPointData",
    "SupremizerSet",
    "beta_bar",
    "beta_exact",
    "beta_exact_pair",
    "build_control_point",
    "build_supremizers",
    "gamma_q",
    "rayleigh_quotient",
    "y_of_w",
]
