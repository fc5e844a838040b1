"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the criterion lines are
repeated in the terminal summary. Criteria 3, 5 and 7 share the two
full-resolution benchmark runs from the ``benchmark_runs`` fixture.
"""

import json
import time

import numpy as np
import pytest

from conftest import record_criterion
from infsup.certification import BoundRegistry, QhatExpansion, global_lb, global_ub, qhat_vector, theta_hat
from infsup.cli import main
from infsup.greedy import GreedyConfig, run_cnnscm
from infsup.natural_norm import beta_bar, beta_exact, build_control_point, build_supremizers
from infsup.oracles import beta_bruteforce, lp_vertex_oracle
from infsup.scm import LinearProgram, solve_lp
from infsup.truth import DEFAULT_GRIDS, PROBLEMS, uniform_grid

SANDWICH_SLACK = 1e-8


@pytest.mark.parametrize("name", ["p1", "p2"])
def test_criterion_1_sandwich(name):
    t0 = time.perf_counter()
    op = PROBLEMS[name](16)
    xi = uniform_grid(op.domain, DEFAULT_GRIDS[name])
    registry, _ = run_cnnscm(op, xi, GreedyConfig())
    rng = np.random.default_rng(1)
    worst = np.inf
    for i in rng.choice(len(xi), 200, replace=False):
        mu = xi.points[i]
        lb, ub = global_lb(registry, op, mu), global_ub(registry, op, mu)
        truth = beta_bruteforce(op, mu).value
        worst = min(worst, (truth - lb) / ub + SANDWICH_SLACK, (ub - truth) / ub + SANDWICH_SLACK)
    elapsed = time.perf_counter() - t0
    ok = worst >= 0.0 and elapsed <= 300.0
    record_criterion(1, ok, f"[{name}] 200 points, min relative margin {worst:.3e}, {elapsed:.1f}s")
    assert ok


def test_criterion_2_certification():
    op = PROBLEMS["p1"](16)
    xi = uniform_grid(op.domain, (33, 17))
    parts, ok = [], True
    for eps_g in (0.8, 0.5, 0.3):
        _, report = run_cnnscm(op, xi, GreedyConfig(eps_g=eps_g, max_rounds=20))
        good = report.converged and float(np.max(report.grid.eps)) <= eps_g
        ok &= good
        parts.append(f"eps_g={eps_g}: max eps {report.final_max_eps:.4f} in {len(report.rounds)} round(s)")
    record_criterion(2, ok, "; ".join(parts))
    assert ok


def test_criterion_3_gap_reduction(benchmark_runs):
    limits = {"p1": lambda g1: 0.8 <= g1 < 1.0, "p2": lambda g1: g1 >= 0.95}
    parts, ok = [], True
    for name in ("p1", "p2"):
        _, _, _, report, elapsed = benchmark_runs[name]
        gaps = [r["max_eps"] for r in report.rounds]
        good = (
            limits[name](gaps[0])
            and report.converged
            and gaps[-1] <= 0.8
            and 2 <= len(gaps) <= 12
            and elapsed <= 1800.0
        )
        ok &= good
        parts.append(f"{name}: gaps {' -> '.join(f'{g:.4f}' for g in gaps)} ({elapsed:.1f}s)")
    record_criterion(3, ok, "; ".join(parts))
    assert ok


def test_criterion_4_lp(benchmark_runs):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(200):
        q, m = int(rng.integers(1, 5)), int(rng.integers(0, 11))
        lo, hi = -rng.uniform(0.5, 5.0, q), rng.uniform(0.5, 5.0, q)
        g = rng.standard_normal((m, q))
        h = g @ (lo + rng.random(q) * (hi - lo)) - rng.random(m)
        lp = LinearProgram(rng.standard_normal(q), lo, hi, g, h)
        sol, ref = solve_lp(lp), lp_vertex_oracle(lp)
        worst = max(worst, abs(sol.value - ref.value) / max(1.0, abs(ref.value)))
    infeasible = sum(run[3].lp_infeasible for run in benchmark_runs.values())
    ok = worst <= 1e-10 and infeasible == 0
    record_criterion(4, ok, f"200 LPs, max deviation {worst:.2e}; infeasible g_lb LPs in benchmark runs: {infeasible}")
    assert ok


def test_criterion_5_natural_norm(benchmark_runs):
    worst_norm, worst_trans = 0.0, -np.inf
    rng = np.random.default_rng(5)
    for name, (op, _, registry, _, _) in benchmark_runs.items():
        sup = build_supremizers(op)
        for sub in registry.subdomains:
            cp = build_control_point(sup, sub.mubar)
            worst_norm = max(worst_norm, abs(beta_bar(cp, sup, sub.mubar)[0] - 1.0))
        lo, hi = np.array(op.domain.lo), np.array(op.domain.hi)
        for _ in range(50):
            mubar, mu = lo + rng.random((2, 2)) * (hi - lo)
            cp = build_control_point(sup, mubar)
            lam, _ = beta_bar(cp, sup, mu)
            worst_trans = max(worst_trans, cp.beta_exact * lam - beta_exact(sup, mu))
    ok = worst_norm <= 1e-12 and worst_trans <= 1e-9
    record_criterion(
        5, ok, f"max |betabar(mubar)-1| = {worst_norm:.2e}; 100 pairs, max violation {worst_trans:.2e}"
    )
    assert ok


def test_criterion_6_qhat_identity():
    worst = 0.0
    rng = np.random.default_rng(6)
    for name in ("p1", "p2"):
        op = PROBLEMS[name](24)
        sup = build_supremizers(op)
        lo, hi = np.array(op.domain.lo), np.array(op.domain.hi)
        for _ in range(50):
            w = rng.standard_normal(op.size)
            mu = lo + rng.random(2) * (hi - lo)
            tw = np.linalg.solve(op.xmat, op.direct(mu)) @ w
            ref = (tw @ op.xmat @ tw) / (w @ op.xmat @ w)
            got = theta_hat(op, mu) @ qhat_vector(sup, w)
            worst = max(worst, abs(got - ref) / ref)
    qhat = QhatExpansion(3).qhat
    ok = worst <= 1e-10 and qhat == 6
    record_criterion(6, ok, f"100 (w, mu) pairs, max relative deviation {worst:.2e}; Qhat = {qhat}")
    assert ok


def test_criterion_7_monotonicity(benchmark_runs):
    rng = np.random.default_rng(7)
    ok, parts = True, []
    for name, (op, xi, registry, report, _) in benchmark_runs.items():
        idx = rng.choice(len(xi), 500, replace=False)
        prev_lb, prev_ub = np.full(500, -np.inf), np.full(500, np.inf)
        rounds = sorted({s.round for s in registry.subdomains})
        for k in rounds:
            part = BoundRegistry(jnb=registry.jnb, metric_scale=registry.metric_scale,
                                 subdomains=[s for s in registry.subdomains if s.round <= k])
            lb = np.array([global_lb(part, op, xi.points[i]) for i in idx])
            ub = np.array([global_ub(part, op, xi.points[i]) for i in idx])
            snap_lb, snap_ub = report.snapshots[k - 1]
            ok &= bool(np.all(lb >= prev_lb) and np.all(ub <= prev_ub))
            ok &= bool(np.all(snap_lb[idx] >= (prev_lb if k > 1 else -np.inf)))
            ok &= bool(np.allclose(snap_lb[idx], lb, rtol=1e-10, atol=1e-12) and np.allclose(snap_ub[idx], ub, rtol=1e-12))
            prev_lb, prev_ub = lb, ub
        parts.append(f"{name}: {len(rounds)} snapshots")
    record_criterion(7, ok, "500 points; " + ", ".join(parts))
    assert ok


def test_criterion_8_determinism(tmp_path):
    outputs = []
    for tag in ("a", "b"):
        cfg = tmp_path / f"{tag}.json"
        cfg.write_text(json.dumps({"problem": "p2", "truth_n": 16, "seed": 11, "output_dir": str(tmp_path / tag)}))
        assert main(["run", "--config", str(cfg)]) == 0
        outputs.append(tuple((tmp_path / tag / f).read_bytes() for f in ("registry.json", "bounds.csv")))
    ok = outputs[0] == outputs[1]
    record_criterion(8, ok, "registry.json and bounds.csv byte-identical across two seeded runs")
    assert ok
