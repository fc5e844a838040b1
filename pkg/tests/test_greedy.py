import numpy as np
import pytest

from infsup.errors import RoundCapExceeded
from infsup.greedy import GreedyConfig, ScmContext, inner_greedy, run_cnnscm, run_nnscm
from infsup.truth import TrainSample, assemble_problem1, assemble_problem2, uniform_grid


@pytest.fixture(scope="module")
def p1_16():
    op = assemble_problem1(16)
    return op, uniform_grid(op.domain, (33, 17))


def test_config_validation():
    for bad in (dict(eps_g=1.0), dict(eps_betabar=0.0), dict(jnb=0), dict(max_rounds=0)):
        with pytest.raises(ValueError):
            GreedyConfig(**bad)


def test_single_point_train_set(p1_small):
    xi = TrainSample(np.array([[1.0, 1.0]]))
    registry, report = run_cnnscm(p1_small, xi, GreedyConfig())
    assert len(registry) == 1 and len(registry.subdomains[0].sample) == 1
    assert report.final_max_eps == pytest.approx(0.0, abs=1e-8)


def test_inner_greedy_positivity_and_coverage(p1_16):
    op, xi = p1_16
    ctx = ScmContext(op, xi, GreedyConfig(jnb=None))
    res = inner_greedy(ctx, ctx.initial_index(), xi.active)
    assert np.all(res.lb[res.covered] > 0.0)
    assert all(b >= a for a, b in zip(res.coverage_history, res.coverage_history[1:]))
    assert res.sample_indices[0] == ctx.initial_index()


def test_inner_greedy_meets_tolerance(p1_16):
    op, xi = p1_16
    ctx = ScmContext(op, xi, GreedyConfig())
    res = inner_greedy(ctx, ctx.initial_index(), xi.active)
    assert not res.capped
    assert res.eps_max <= 0.8


def test_initial_index_centre_and_seed(p1_16):
    op, xi = p1_16
    ctx = ScmContext(op, xi, GreedyConfig())
    np.testing.assert_allclose(xi.points[ctx.initial_index()], [2.05, 1.0], atol=0.07)
    a = ScmContext(op, xi, GreedyConfig(rng_seed=4)).initial_index()
    assert a == ScmContext(op, xi, GreedyConfig(rng_seed=4)).initial_index()


def test_nnscm_covers_everything(p1_16):
    op, xi = p1_16
    registry, report = run_nnscm(op, xi, GreedyConfig())
    assert len(report.rounds) == 1 and report.converged
    assert np.all(report.grid.lb > 0.0)


def test_nnscm_phi_raises_coverage_threshold(p1_16):
    op, xi = p1_16
    _, plain = run_nnscm(op, xi, GreedyConfig())
    _, strict = run_nnscm(op, xi, GreedyConfig(phi=lambda mu, mubar: 0.2))
    assert len(strict.rounds[0]["control_points"]) >= len(plain.rounds[0]["control_points"])


def test_cnnscm_rounds_monotone(p1_run_small):
    _, _, registry, report = p1_run_small
    assert report.converged and report.final_max_eps <= 0.8
    for (lb0, ub0), (lb1, ub1) in zip(report.snapshots, report.snapshots[1:]):
        assert np.all(lb1 >= lb0) and np.all(ub1 <= ub0)
    assert sum(len(r["control_points"]) for r in report.rounds) == len(registry)
    assert [s.round for s in registry.subdomains] == sorted(s.round for s in registry.subdomains)


def test_loose_tolerance_single_round(p1_16):
    op, xi = p1_16
    _, report = run_cnnscm(op, xi, GreedyConfig(eps_g=0.999))
    assert len(report.rounds) == 1


def test_round_cap(p1_16):
    op, xi = p1_16
    with pytest.raises(RoundCapExceeded) as info:
        run_cnnscm(op, xi, GreedyConfig(eps_g=0.01, max_rounds=1))
    assert len(info.value.registry) >= 1
    assert info.value.report.converged is False


def test_deterministic(p2_small):
    xi = uniform_grid(p2_small.domain, (17, 17))
    a, _ = run_cnnscm(p2_small, xi, GreedyConfig(rng_seed=7))
    b, _ = run_cnnscm(p2_small, xi, GreedyConfig(rng_seed=7))
    assert a.dumps() == b.dumps()


def test_normalized_metric_runs(p2_small):
    xi = uniform_grid(p2_small.domain, (9, 9))
    registry, report = run_cnnscm(p2_small, xi, GreedyConfig(normalize_metric=True))
    assert registry.metric_scale is not None and report.converged


def test_point_cap_is_reported(p1_16):
    op, xi = p1_16
    ctx = ScmContext(op, xi, GreedyConfig(max_points_per_subdomain=2, eps_betabar=0.01))
    res = inner_greedy(ctx, ctx.initial_index(), xi.active)
    assert res.capped and len(res.sample_indices) == 2


@pytest.mark.parametrize("asm", [assemble_problem1, assemble_problem2])
def test_report_serializes(asm):
    import json

    op = asm(10)
    _, report = run_cnnscm(op, uniform_grid(op.domain, (9, 9)), GreedyConfig())
    text = json.dumps(report.to_dict())
    assert json.loads(text)["converged"] is True
