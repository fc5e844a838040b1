"""Run configuration, bounds tables and external operator files.

Config files are a single flat JSON object::

    {"schema_version": 1, "problem": "p1", "truth_n": 24,
     "grid_counts": [129, 65], "eps_betabar": 0.8, "eps_g": 0.8, "jnb": 8,
     "phi_constant": 0.0, "seed": null, "max_rounds": 20,
     "max_points_per_subdomain": 200, "algorithm": "cnnscm",
     "xnorm": "identity", "normalize_metric": false, "output_dir": "out"}

Every key except ``problem`` is optional. ``problem`` may also be
``"external"``, in which case ``matrix_file`` names an ``.npz`` archive with
arrays ``terms`` (Q, N, N), ``xmat`` (N, N), ``domain_lo``/``domain_hi``
(P,) and an affine coefficient map ``theta(mu) = theta_const + theta_lin @ mu``
given by ``theta_const`` (Q,) and ``theta_lin`` (Q, P).

Bounds tables are CSV with columns ``mu1, ..., muP, beta_lb, beta_ub, eps,
beta_truth``; numbers use 17 significant digits, and ``beta_truth`` is
empty when unknown.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .greedy import GreedyConfig
from .truth import DEFAULT_GRIDS, PROBLEMS, AffineOperator, ParameterDomain

CONFIG_SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    problem: str = "p1"
    matrix_file: str | None = None
    truth_n: int = 24
    grid_counts: list | None = None
    eps_betabar: float = 0.8
    eps_g: float = 0.8
    jnb: int | None = 8
    phi_constant: float = 0.0
    seed: int | None = None
    max_rounds: int = 20
    max_points_per_subdomain: int = 200
    algorithm: str = "cnnscm"
    xnorm: str = "identity"
    normalize_metric: bool = False
    output_dir: str = "out"
    schema_version: int = CONFIG_SCHEMA_VERSION

    def __post_init__(self):
        if self.schema_version != CONFIG_SCHEMA_VERSION:
            raise ConfigError("schema_version", f"unsupported version {self.schema_version!r}")
        if self.problem not in (*PROBLEMS, "external"):
            raise ConfigError("problem", f"expected p1, p2 or external, got {self.problem!r}")
        if self.problem == "external" and not self.matrix_file:
            raise ConfigError("matrix_file", "required when problem is external")
        if not isinstance(self.truth_n, int) or self.truth_n < 4:
            raise ConfigError("truth_n", "must be an integer >= 4")
        if self.grid_counts is None:
            self.grid_counts = list(DEFAULT_GRIDS.get(self.problem, (33, 33)))
        if not all(isinstance(c, int) and c >= 2 for c in self.grid_counts):
            raise ConfigError("grid_counts", "entries must be integers >= 2")
        for name in ("eps_betabar", "eps_g"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not 0.0 < v < 1.0:
                raise ConfigError(name, f"must lie in (0, 1), got {v!r}")
        if self.jnb is not None and (not isinstance(self.jnb, int) or self.jnb < 1):
            raise ConfigError("jnb", "must be a positive integer or null (all constraints)")
        if not isinstance(self.phi_constant, (int, float)) or self.phi_constant < 0.0:
            raise ConfigError("phi_constant", "must be >= 0")
        if self.seed is not None and not isinstance(self.seed, int):
            raise ConfigError("seed", "must be an integer or null")
        for name in ("max_rounds", "max_points_per_subdomain"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(name, "must be an integer >= 1")
        if self.algorithm not in ("nnscm", "cnnscm"):
            raise ConfigError("algorithm", f"expected nnscm or cnnscm, got {self.algorithm!r}")
        if self.xnorm not in ("identity", "h1-surrogate"):
            raise ConfigError("xnorm", f"expected identity or h1-surrogate, got {self.xnorm!r}")

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be a JSON object")
        known = set(cls.__dataclass_fields__)
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown config key")
        return cls(**data)

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self):
        return asdict(self)

    def greedy_config(self):
        phi_value = float(self.phi_constant)

        def phi(mu, mubar):
            return phi_value

        return GreedyConfig(
            eps_betabar=self.eps_betabar,
            eps_g=self.eps_g,
            jnb=self.jnb,
            phi=phi if phi_value else GreedyConfig().phi,
            max_rounds=self.max_rounds,
            max_points_per_subdomain=self.max_points_per_subdomain,
            rng_seed=self.seed,
            normalize_metric=self.normalize_metric,
        )

    def build_operator(self, base_dir=None):
        if self.problem == "external":
            path = Path(self.matrix_file)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return load_external_operator(path)
        return PROBLEMS[self.problem](self.truth_n, xnorm=self.xnorm)


def load_external_operator(path):
    with np.load(path) as data:
        terms = np.asarray(data["terms"], dtype=float)
        xmat = np.asarray(data["xmat"], dtype=float)
        lo = np.asarray(data["domain_lo"], dtype=float)
        hi = np.asarray(data["domain_hi"], dtype=float)
        const = np.asarray(data["theta_const"], dtype=float)
        lin = np.asarray(data["theta_lin"], dtype=float)
    if lin.shape != (terms.shape[0], lo.shape[0]) or const.shape != (terms.shape[0],):
        raise ValueError("theta_const/theta_lin do not match terms and domain")

    def theta(mu):
        return const + lin @ mu

    return AffineOperator(
        theta=theta,
        terms=tuple(terms),
        xmat=xmat,
        domain=ParameterDomain(tuple(lo), tuple(hi)),
        name=Path(path).stem,
    )


@dataclass
class BoundsTable:
    mu: np.ndarray
    beta_lb: np.ndarray
    beta_ub: np.ndarray
    eps: np.ndarray
    beta_truth: np.ndarray = field(default=None)

    def __post_init__(self):
        self.mu = np.atleast_2d(np.asarray(self.mu, dtype=float))
        n = len(self.mu)
        for name in ("beta_lb", "beta_ub", "eps"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if arr.shape[0] != n:
                raise ValueError(f"{name} has {arr.shape[0]} rows, expected {n}")
            setattr(self, name, arr)
        if self.beta_truth is None:
            self.beta_truth = np.full(n, np.nan)
        self.beta_truth = np.asarray(self.beta_truth, dtype=float).reshape(-1)

    def __len__(self):
        return len(self.mu)

    @property
    def columns(self):
        return [f"mu{i + 1}" for i in range(self.mu.shape[1])] + ["beta_lb", "beta_ub", "eps", "beta_truth"]


def _fmt(x):
    return "" if math.isnan(x) else format(float(x), ".17g")


def write_bounds(path, table: BoundsTable):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.columns)
        for i in range(len(table)):
            row = [_fmt(v) for v in table.mu[i]]
            row += [_fmt(table.beta_lb[i]), _fmt(table.beta_ub[i]), _fmt(table.eps[i]), _fmt(table.beta_truth[i])]
            writer.writerow(row)


def read_bounds(path) -> BoundsTable:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError("empty bounds file")
    header = rows[0]
    tail = ["beta_lb", "beta_ub", "eps", "beta_truth"]
    p = len(header) - len(tail)
    if p < 1 or header[p:] != tail or header[:p] != [f"mu{i + 1}" for i in range(p)]:
        raise ValueError(f"unexpected bounds header {header}")
    data = np.empty((len(rows) - 1, len(header)))
    for k, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise ValueError(f"row {k + 2} has {len(row)} fields, expected {len(header)}")
        data[k] = [float(v) if v != "" else np.nan for v in row]
    return BoundsTable(data[:, :p], data[:, p], data[:, p + 1], data[:, p + 2], data[:, p + 3])
