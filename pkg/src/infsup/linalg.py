"""Dense kernels and symmetric-definite generalized eigensolvers.

Matrices are plain 2-D ``numpy.ndarray`` objects of ``float64`` in the
default row-major (C) layout. Every inf-sup, natural-norm and continuity
constant in the package reduces to one of the routines here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    ConvergenceFailure,
    IndefiniteRhs,
    NotPositiveDefinite,
    SingularMatrix,
)

SYMMETRY_RTOL = 1e-12
RESIDUAL_RTOL = 1e-8


def as_matrix(a, *, square=False, name="matrix"):
    """Return ``a`` as a finite float64 2-D array (no copy when possible)."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def symmetrize(a):
    return 0.5 * (a + a.T)


def solve_linear(a, b):
    """Solve ``a @ c = b`` by partially pivoted LU.

    Raises
    ------
    SingularMatrix
        If a pivot of the factorization is below ``1e-14 * ||a||``.
    """
    a = as_matrix(a, square=True, name="A")
    b = np.asarray(b, dtype=float)
    if b.shape[0] != a.shape[0]:
        raise ValueError("row count of B does not match A")
    scale = np.linalg.norm(a, ord=np.inf)
    lu, piv = sla.lu_factor(a, check_finite=False)
    if scale == 0.0 or np.min(np.abs(np.diag(lu))) <= 1e-14 * scale:
        raise SingularMatrix("pivot below 1e-14*||A|| in LU factorization")
    return sla.lu_solve((lu, piv), b, check_finite=False)


def cholesky(a):
    """Lower-triangular ``L`` with ``L @ L.T == a`` (after symmetrization)."""
    a = symmetrize(as_matrix(a, square=True))
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None


@dataclass(frozen=True)
class SymmetricPencil:
    """The pencil ``lhs - lambda * rhs`` with ``lhs`` symmetric, ``rhs`` SPD.

    Both matrices are checked for symmetry to a relative tolerance of
    ``1e-12`` and then stored symmetrized. The Cholesky factor of ``rhs`` is
    computed once, on construction.
    """

    lhs: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        lhs = as_matrix(self.lhs, square=True, name="lhs")
        rhs = as_matrix(self.rhs, square=True, name="rhs")
        if lhs.shape != rhs.shape:
            raise ValueError("pencil matrices differ in shape")
        for name, m in (("lhs", lhs), ("rhs", rhs)):
            scale = max(np.abs(m).max(), np.finfo(float).tiny)
            if np.abs(m - m.T).max() > SYMMETRY_RTOL * scale:
                raise ValueError(f"{name} is not symmetric")
        rhs = symmetrize(rhs)
        try:
            factor = np.linalg.cholesky(rhs)
        except np.linalg.LinAlgError:
            raise IndefiniteRhs("rhs is not positive definite") from None
        object.__setattr__(self, "lhs", symmetrize(lhs))
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "_factor", factor)

    @property
    def dim(self):
        return self.lhs.shape[0]

    @property
    def rhs_factor(self):
        return self._factor


@dataclass(frozen=True)
class EigenResult:
    eigenvalue: float
    eigenvector: np.ndarray


def extreme_symmetric_eigenpair(m, which="min"):
    """Extreme eigenpair of a symmetric matrix; eigenvector has unit 2-norm."""
    n = m.shape[0]
    index = 0 if which == "min" else n - 1
    try:
        vals, vecs = sla.eigh(
            symmetrize(m), subset_by_index=[index, index], check_finite=False
        )
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(f"symmetric eigensolve failed: {exc}") from None
    return float(vals[0]), vecs[:, 0]


def _pencil_eigenpair(p: SymmetricPencil, which):
    factor = p.rhs_factor
    # Whitened standard problem: L^{-1} lhs L^{-T} u = lambda u, v = L^{-T} u.
    half = sla.solve_triangular(factor, p.lhs, lower=True, check_finite=False)
    whitened = sla.solve_triangular(factor, half.T, lower=True, check_finite=False)
    lam, u = extreme_symmetric_eigenpair(whitened, which)
    v = sla.solve_triangular(factor.T, u, lower=False, check_finite=False)
    check_residual(p, lam, v)
    return EigenResult(lam, v)


def check_residual(p: SymmetricPencil, lam, v):
    """Enforce ``||lhs v - lam rhs v|| <= 1e-8 ||lhs|| ||v||``."""
    resid = np.linalg.norm(p.lhs @ v - lam * (p.rhs @ v))
    bound = RESIDUAL_RTOL * max(np.linalg.norm(p.lhs, 2), np.linalg.norm(p.rhs, 2) * abs(lam))
    bound *= np.linalg.norm(v)
    if not resid <= bound:
        raise ConvergenceFailure(
            f"eigenpair residual {resid:.3e} exceeds contract {bound:.3e}"
        )


def smallest_eigenpair(p: SymmetricPencil) -> EigenResult:
    """Minimal generalized eigenpair; the eigenvector satisfies ``v' rhs v = 1``."""
    return _pencil_eigenpair(p, "min")


def largest_eigenpair(p: SymmetricPencil) -> EigenResult:
    """Maximal generalized eigenpair; the eigenvector satisfies ``v' rhs v = 1``."""
    return _pencil_eigenpair(p, "max")


def smallest_singular_triplet(a):
    """Smallest singular value of a square matrix and its right singular vector.

    Works on the symmetric block matrix ``[[0, a], [a.T, 0]]`` whose spectrum
    is ``{+-sigma_i}``; unlike the normal-equations pencil ``a.T a`` this
    keeps the relative accuracy of small singular values at roughly machine
    precision times ``cond(a)`` instead of its square.
    """
    a = as_matrix(a, square=True)
    n = a.shape[0]
    block = np.zeros((2 * n, 2 * n))
    block[:n, n:] = a
    block[n:, :n] = a.T
    try:
        vals, vecs = sla.eigh(block, subset_by_index=[n, n], check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(f"augmented eigensolve failed: {exc}") from None
    right = vecs[n:, 0]
    norm = np.linalg.norm(right)
    if norm == 0.0:
        raise ConvergenceFailure("augmented eigenvector has no right component")
    return max(float(vals[0]), 0.0), right / norm
