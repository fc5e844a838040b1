"""Command-line front end: ``infsup run | validate | plot``.

Exit codes: 0 success, 1 configuration/IO/validation failure, 2 when cNNSCM
stops at ``max_rounds`` without meeting ``eps_g`` (artifacts are still
written). ``INFSUP_THREADS`` caps the BLAS thread pool.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from .certification import BoundRegistry, global_lb, global_ub
from .errors import ConfigError, InfSupError, RoundCapExceeded
from .greedy import run_cnnscm, run_nnscm
from .io import BoundsTable, RunConfig, read_bounds, write_bounds
from .oracles import beta_bruteforce
from .plotting import heatmap_svg, histogram_svg
from .scm import ratio
from .truth import uniform_grid

log = logging.getLogger("infsup")

VALIDATE_SLACK = 1e-8


def _thread_limit():
    value = os.environ.get("INFSUP_THREADS")
    if not value:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(value))


def _bounds_table(points, lb, ub):
    return BoundsTable(points, lb, ub, ratio(lb, ub))


def write_run_artifacts(out, registry, report, points):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for k, (lb, ub) in enumerate(report.snapshots, start=1):
        write_bounds(out / f"bounds_round{k}.csv", _bounds_table(points, lb, ub))
    final = _bounds_table(points, report.grid.lb, report.grid.ub)
    write_bounds(out / "bounds.csv", final)
    (out / "registry.json").write_text(registry.dumps() + "\n")
    summary = report.to_dict()
    summary["max_eps"] = float(np.max(final.eps))
    summary["grid_size"] = len(final)
    (out / "report.json").write_text(json.dumps(summary, indent=1) + "\n")
    return final


def cmd_run(config_path, out=None):
    try:
        cfg = RunConfig.load(config_path)
        op = cfg.build_operator(base_dir=Path(config_path).parent)
    except (ConfigError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = Path(out or cfg.output_dir)
    xi = uniform_grid(op.domain, cfg.grid_counts)
    runner = run_cnnscm if cfg.algorithm == "cnnscm" else run_nnscm
    status = 0
    with _thread_limit():
        try:
            registry, report = runner(op, xi, cfg.greedy_config())
        except RoundCapExceeded as exc:
            print(f"warning: {exc}", file=sys.stderr)
            registry, report, status = exc.registry, exc.report, 2
    try:
        final = write_run_artifacts(out, registry, report, xi.points)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"{cfg.algorithm} on {op.name}: {len(report.rounds)} round(s), "
        f"{len(registry)} control point(s), max gap {np.max(final.eps):.6g}"
    )
    return status


def registry_integrity(registry: BoundRegistry, op, rtol=1e-8):
    """Self-consistency of stored SCM data; returns a list of violations."""
    problems = []
    for k, sub in enumerate(registry.subdomains):
        box = sub.box
        for j, (mu, bb, y) in enumerate(zip(sub.sample.points, sub.sample.betabar, sub.sample.ystar)):
            value = float(op.coefficients(mu) @ y)
            if abs(value - bb) > rtol * max(1.0, abs(bb)):
                problems.append(
                    f"ystar_consistency: subdomain {k} point {j}: J(y*)={value:.12g} != betabar={bb:.12g}"
                )
            slack = rtol * (1.0 + box.upper)
            if np.any(y < box.lower - slack) or np.any(y > box.upper + slack):
                problems.append(f"ystar_outside_box: subdomain {k} point {j}")
    return problems


def validate_registry(registry, op, points, samples, seed=0):
    """Check ``lb <= beta_truth <= ub`` on ``samples`` random grid points."""
    violations = registry_integrity(registry, op)
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(points), size=min(samples, len(points)), replace=False) if samples else []
    worst_lower = worst_upper = np.inf
    for i in idx:
        mu = points[i]
        lb = global_lb(registry, op, mu)
        ub = global_ub(registry, op, mu)
        truth = beta_bruteforce(op, mu).value
        slack = VALIDATE_SLACK * ub
        worst_lower = min(worst_lower, (truth - lb) / ub)
        worst_upper = min(worst_upper, (ub - truth) / ub)
        if lb > truth + slack:
            violations.append(f"lower_bound_violation at mu={tuple(mu)}: lb={lb:.12g} > truth={truth:.12g}")
        if truth > ub + slack:
            violations.append(f"upper_bound_violation at mu={tuple(mu)}: truth={truth:.12g} > ub={ub:.12g}")
    return violations, worst_lower, worst_upper


def cmd_validate(registry_path, config_path, samples):
    try:
        cfg = RunConfig.load(config_path)
        op = cfg.build_operator(base_dir=Path(config_path).parent)
        registry = BoundRegistry.from_dict(json.loads(Path(registry_path).read_text()), op)
    except (ConfigError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if samples == 0:
        print("warning: sample count is 0; sandwich check is vacuous", file=sys.stderr)
    xi = uniform_grid(op.domain, cfg.grid_counts)
    with _thread_limit():
        violations, lo, hi = validate_registry(registry, op, xi.points, samples, seed=cfg.seed or 0)
    print(f"checked {samples} point(s): worst (truth-lb)/ub = {lo:.3e}, worst (ub-truth)/ub = {hi:.3e}")
    for v in violations:
        print(f"FAIL {v}")
    print("PASS" if not violations else f"FAIL ({len(violations)} violation(s))")
    return 0 if not violations else 1


def cmd_plot(bounds_path, out=None):
    try:
        table = read_bounds(bounds_path)
    except (OSError, ValueError) as exc:
        print(f"error: malformed bounds file: {exc}", file=sys.stderr)
        return 1
    if table.mu.shape[1] != 2:
        print("error: plotting needs exactly two parameters", file=sys.stderr)
        return 1
    out = Path(out) if out else Path(bounds_path).parent
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(bounds_path).stem
    (out / f"{stem}_lb.svg").write_text(heatmap_svg(table.mu, table.beta_lb, "beta_LB"))
    (out / f"{stem}_ub.svg").write_text(heatmap_svg(table.mu, table.beta_ub, "beta_UB"))
    (out / f"{stem}_gap.svg").write_text(histogram_svg(table.eps, "gap histogram"))
    print(f"max gap {np.nanmax(table.eps):.6g}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="infsup", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run NNSCM/cNNSCM from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p = sub.add_parser("validate", help="check a registry against brute-force beta")
    p.add_argument("--registry", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--samples", type=int, default=200)
    p = sub.add_parser("plot", help="SVG heatmaps and gap histogram of a bounds table")
    p.add_argument("--bounds", required=True)
    p.add_argument("--out")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    if args.command == "run":
        level = min(level, logging.INFO)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(message)s")
    try:
        if args.command == "run":
            return cmd_run(args.config, args.out)
        if args.command == "validate":
            return cmd_validate(args.registry, args.config, args.samples)
        return cmd_plot(args.bounds, args.out)
    except InfSupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
