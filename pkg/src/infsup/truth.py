"""Affine truth operators for the two benchmark problems.

Both problems are discretized by Chebyshev collocation on the square
``(-1, 1)^2``. Unknowns live on the interior nodes of the tensor grid and are
ordered with the x index varying slowest: ``k = i * (n - 1) + j`` for node
``(x_i, y_j)``. The homogeneous Dirichlet rows and columns are removed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .linalg import as_matrix, cholesky


def chebyshev_points(n):
    """Chebyshev-Gauss-Lobatto points ``cos(j pi / n)``, ``j = 0..n``."""
    return np.cos(np.pi * np.arange(n + 1) / n)


def chebyshev_diff_matrix(n):
    """First-derivative collocation matrix on ``n + 1`` Chebyshev points.

    Rows and columns follow :func:`chebyshev_points` (descending from 1 to
    -1). Diagonal entries use the negative-sum trick, so constants are
    differentiated to zero exactly.
    """
    if n < 2:
        raise ValueError("chebyshev_diff_matrix needs n >= 2")
    x = chebyshev_points(n)
    c = np.ones(n + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n + 1)
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    d -= np.diag(d.sum(axis=1))
    return d


@dataclass(frozen=True)
class ParameterDomain:
    """Axis-aligned box ``prod_p [lo_p, hi_p]``."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("domain needs matching, nonempty bounds")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError("domain has lo > hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return len(self.lo)

    @property
    def widths(self):
        return np.subtract(self.hi, self.lo)

    def contains(self, mu, atol=1e-12):
        mu = np.asarray(mu, dtype=float)
        return bool(np.all(mu >= np.subtract(self.lo, atol)) and np.all(mu <= np.add(self.hi, atol)))


@dataclass(frozen=True)
class AffineOperator:
    """``A(mu) = sum_q theta_q(mu) A_q`` together with the X-inner product.

    ``theta`` maps a parameter tuple to the length-Q coefficient vector.
    ``direct`` (optional) assembles ``A(mu)`` without the affine split and is
    only used to cross-check the decomposition.
    """

    theta: Callable[[np.ndarray], np.ndarray]
    terms: tuple
    xmat: np.ndarray
    domain: ParameterDomain
    name: str = "operator"
    direct: Callable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        terms = tuple(as_matrix(t, square=True, name="A_q") for t in self.terms)
        if not terms:
            raise ValueError("an affine operator needs at least one term")
        n = terms[0].shape[0]
        if any(t.shape != (n, n) for t in terms):
            raise ValueError("affine terms differ in dimension")
        xmat = as_matrix(self.xmat, square=True, name="xmat")
        if xmat.shape != (n, n):
            raise ValueError("xmat dimension does not match the terms")
        for t in terms:
            t.flags.writeable = False
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "xmat", xmat)
        object.__setattr__(self, "_xfactor", cholesky(xmat))
        object.__setattr__(self, "_x_is_identity", bool(np.array_equal(xmat, np.eye(n))))

    @property
    def Q(self):
        return len(self.terms)

    @property
    def size(self):
        return self.terms[0].shape[0]

    @property
    def xfactor(self):
        """Lower Cholesky factor of ``xmat``."""
        return self._xfactor

    @property
    def x_is_identity(self):
        return self._x_is_identity

    def coefficients(self, mu):
        return np.asarray(self.theta(np.asarray(mu, dtype=float)), dtype=float)

    def coefficients_many(self, mus):
        """Theta evaluated row-wise on a ``(P, dim)`` array of parameters."""
        mus = np.atleast_2d(np.asarray(mus, dtype=float))
        return np.array([self.coefficients(mu) for mu in mus]).reshape(len(mus), self.Q)

    def assemble(self, mu):
        coeffs = self.coefficients(mu)
        out = np.zeros_like(self.terms[0])
        for c, t in zip(coeffs, self.terms):
            out += c * t
        return out


def _theta_p(mu):
    return np.array([1.0, mu[0], mu[1]])


def _interior_second_derivatives(n):
    x = chebyshev_points(n)
    d = chebyshev_diff_matrix(n)
    d2 = (d @ d)[1:n, 1:n]
    eye = np.eye(n - 1)
    dxx = np.kron(d2, eye)
    dyy = np.kron(eye, d2)
    xs = np.kron(x[1:n], np.ones(n - 1))
    ys = np.kron(np.ones(n - 1), x[1:n])
    return dxx, dyy, xs, ys


def h1_surrogate_xmat(n):
    """``I + Dx'Dx + Dy'Dy`` on the interior nodes, a discrete H1 surrogate."""
    d = chebyshev_diff_matrix(n)[1:n, 1:n]
    eye = np.eye(n - 1)
    dx = np.kron(d, eye)
    dy = np.kron(eye, d)
    return np.eye((n - 1) ** 2) + dx.T @ dx + dy.T @ dy


def _xmat(n, xnorm):
    if xnorm == "identity":
        return np.eye((n - 1) ** 2)
    if xnorm == "h1-surrogate":
        return h1_surrogate_xmat(n)
    raise ValueError(f"unknown xnorm {xnorm!r}")


def assemble_problem1(n=24, xnorm="identity"):
    """``-u_xx - mu1 u_yy - mu2 u`` on ``D = [0.1, 4] x [0, 2]``."""
    if n < 4:
        raise ValueError("assemble_problem1 needs n >= 4")
    dxx, dyy, _, _ = _interior_second_derivatives(n)
    eye = np.eye(dxx.shape[0])

    def direct(mu):
        return -dxx - mu[0] * dyy - mu[1] * eye

    return AffineOperator(
        theta=_theta_p,
        terms=(-dxx, -dyy, -eye),
        xmat=_xmat(n, xnorm),
        domain=ParameterDomain((0.1, 0.0), (4.0, 2.0)),
        name="p1",
        direct=direct,
    )


def assemble_problem2(n=24, xnorm="identity"):
    """``(1 + mu1 x) u_xx + (1 + mu2 y) u_yy`` on ``D = [-0.99, 0.99]^2``.

    The two parameter-independent pieces are merged into one Laplacian term,
    giving ``Q = 3``.
    """
    if n < 4:
        raise ValueError("assemble_problem2 needs n >= 4")
    dxx, dyy, xs, ys = _interior_second_derivatives(n)
    xdxx = xs[:, None] * dxx
    ydyy = ys[:, None] * dyy

    def direct(mu):
        return (1.0 + mu[0] * xs)[:, None] * dxx + (1.0 + mu[1] * ys)[:, None] * dyy

    return AffineOperator(
        theta=_theta_p,
        terms=(dxx + dyy, xdxx, ydyy),
        xmat=_xmat(n, xnorm),
        domain=ParameterDomain((-0.99, -0.99), (0.99, 0.99)),
        name="p2",
        direct=direct,
    )


PROBLEMS = {"p1": assemble_problem1, "p2": assemble_problem2}
DEFAULT_GRIDS = {"p1": (129, 65), "p2": (65, 65)}


@dataclass
class TrainSample:
    """Ordered parameter points with pruning flags.

    Pruning only clears ``active`` flags; ``points`` is never reordered.
    """

    points: np.ndarray
    active: np.ndarray = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.active is None:
            self.active = np.ones(len(self.points), dtype=bool)
        else:
            self.active = np.asarray(self.active, dtype=bool).copy()
        if len(np.unique(self.points, axis=0)) != len(self.points):
            raise ValueError("train sample points must be distinct")

    def __len__(self):
        return len(self.points)

    @property
    def active_indices(self):
        return np.flatnonzero(self.active)

    def prune(self, indices):
        self.active[np.asarray(list(indices), dtype=int)] = False

    def reset(self):
        self.active[:] = True

    def copy(self):
        return TrainSample(self.points.copy(), self.active.copy())


def uniform_grid(domain: ParameterDomain, counts: Sequence[int]) -> TrainSample:
    """Tensor grid including endpoints; the last axis varies fastest."""
    counts = tuple(int(c) for c in counts)
    if len(counts) != domain.dim:
        raise ValueError("one count per parameter axis is required")
    if any(c < 2 for c in counts):
        raise ValueError("grid counts must be >= 2")
    axes = [np.linspace(lo, hi, c) for lo, hi, c in zip(domain.lo, domain.hi, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return TrainSample(np.stack([m.ravel() for m in mesh], axis=1))
