import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infsup.certification import (
    BoundRegistry,
    GridBounds,
    QhatExpansion,
    Subdomain,
    beta_ub_local,
    epsilon_global,
    global_lb,
    global_ub,
    qhat_vector,
    theta_hat_from_theta,
)
from infsup.errors import EmptySample, NegativeRadicand, NonpositiveUpperBound
from infsup.natural_norm import beta_exact, beta_exact_pair, build_supremizers
from infsup.oracles import beta_bruteforce
from infsup.scm import ScmSample, ratio
from infsup.truth import AffineOperator, ParameterDomain


class TestExpansion:
    def test_sizes(self):
        assert [QhatExpansion(q).qhat for q in (1, 2, 3, 4)] == [1, 3, 6, 10]
        assert QhatExpansion(3).index_pairs == [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]

    def test_theta_hat_small(self):
        np.testing.assert_array_equal(theta_hat_from_theta([3.0]), [9.0])
        np.testing.assert_array_equal(theta_hat_from_theta([2.0, 5.0]), [4.0, 20.0, 25.0])

    def test_batched(self, rng):
        thetas = rng.standard_normal((7, 3))
        batch = theta_hat_from_theta(thetas)
        for row, t in zip(batch, thetas):
            np.testing.assert_array_equal(row, theta_hat_from_theta(t))


@pytest.mark.parametrize("fixture", ["p1_sup", "p2_sup"])
def test_qhat_identity(fixture, request, rng):
    sup = request.getfixturevalue(fixture)
    op = sup.op
    lo, hi = np.array(op.domain.lo), np.array(op.domain.hi)
    for _ in range(20):
        w = rng.standard_normal(op.size)
        mu = lo + rng.random(2) * (hi - lo)
        tw = np.linalg.solve(op.xmat, op.direct(mu)) @ w
        direct = (tw @ op.xmat @ tw) / (w @ op.xmat @ w)
        z = qhat_vector(sup, w)
        assert theta_hat_from_theta(op.coefficients(mu)) @ z == pytest.approx(direct, rel=1e-10)
        assert z[[0, 3, 5]].min() >= 0.0


def test_qhat_identity_operator():
    op = AffineOperator(theta=lambda mu: np.array([1.0]), terms=(np.eye(4),), xmat=np.eye(4),
                        domain=ParameterDomain((0.0,), (1.0,)))
    np.testing.assert_allclose(qhat_vector(build_supremizers(op), np.arange(1.0, 5.0)), [1.0])


class TestUpperBound:
    def test_exact_minimizer_gives_beta(self, p1_sup):
        mu = (1.3, 0.7)
        beta, w = beta_exact_pair(p1_sup, mu)
        assert beta_ub_local([qhat_vector(p1_sup, w)], p1_sup.op, mu) == pytest.approx(beta, rel=1e-8)

    def test_random_candidates_bound_from_above(self, p2_sup, rng):
        cands = np.array([qhat_vector(p2_sup, rng.standard_normal(p2_sup.op.size)) for _ in range(5)])
        for mu in rng.uniform(-0.99, 0.99, (100, 2)):
            assert beta_ub_local(cands, p2_sup.op, mu) >= beta_exact(p2_sup, mu) * (1 - 1e-10)

    def test_empty(self, p1_sup):
        with pytest.raises(EmptySample):
            beta_ub_local(np.zeros((0, 6)), p1_sup.op, (1.0, 1.0))

    def test_negative_radicand(self, p1_sup):
        with pytest.raises(NegativeRadicand):
            beta_ub_local([[-1.0, 0, 0, 0, 0, 0]], p1_sup.op, (1.0, 1.0))


def registry_for(run):
    return run[2]


class TestRegistry:
    def test_single_subdomain_at_control_point(self, p1_run_small):
        op, _, registry, _ = p1_run_small
        reg = BoundRegistry(jnb=registry.jnb, subdomains=[registry.subdomains[0]])
        sub = reg.subdomains[0]
        assert global_lb(reg, op, sub.mubar) == pytest.approx(sub.beta, rel=1e-9)
        assert global_ub(reg, op, sub.mubar) == pytest.approx(sub.beta, rel=1e-8)
        assert global_ub(reg, op, sub.mubar) == beta_ub_local(sub.qhat_matrix, op, sub.mubar)

    def test_global_lb_is_max_and_ub_is_min(self, p1_run_small, rng):
        op, xi, registry, _ = p1_run_small
        subs = registry.subdomains
        assert len(subs) >= 2
        for mu in xi.points[rng.choice(len(xi), 20, replace=False)]:
            parts = [global_lb(BoundRegistry(jnb=registry.jnb, subdomains=[s]), op, mu) for s in subs]
            assert global_lb(registry, op, mu) == max(parts)
            ubs = [beta_ub_local(s.qhat_matrix, op, mu) for s in subs]
            assert global_ub(registry, op, mu) == min(ubs)

    def test_adding_subdomains_tightens(self, p1_run_small, rng):
        op, xi, registry, _ = p1_run_small
        for mu in xi.points[rng.choice(len(xi), 30, replace=False)]:
            prev_lb, prev_ub = -np.inf, np.inf
            for k in range(1, len(registry) + 1):
                part = BoundRegistry(jnb=registry.jnb, subdomains=registry.subdomains[:k])
                lb, ub = global_lb(part, op, mu), global_ub(part, op, mu)
                assert lb >= prev_lb and ub <= prev_ub
                prev_lb, prev_ub = lb, ub

    def test_sandwich(self, p1_run_small, rng):
        op, xi, registry, _ = p1_run_small
        for mu in xi.points[rng.choice(len(xi), 25, replace=False)]:
            truth = beta_bruteforce(op, mu).value
            ub = global_ub(registry, op, mu)
            assert global_lb(registry, op, mu) <= truth + 1e-8 * ub
            assert truth <= ub * (1 + 1e-8)
            assert 0.0 <= epsilon_global(registry, op, mu) < 1.0 + 1e-12

    def test_grid_bounds_match_pointwise(self, p1_run_small, rng):
        op, xi, registry, report = p1_run_small
        gb = GridBounds.from_registry(registry, op, xi.points)
        np.testing.assert_allclose(gb.lb, report.grid.lb, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(gb.ub, report.grid.ub, rtol=1e-12)
        for i in rng.choice(len(xi), 20, replace=False):
            assert gb.lb[i] == pytest.approx(global_lb(registry, op, xi.points[i]), rel=1e-10, abs=1e-12)
            assert gb.ub[i] == pytest.approx(global_ub(registry, op, xi.points[i]), rel=1e-12)
        np.testing.assert_allclose(gb.eps, ratio(gb.lb, gb.ub))

    def test_json_roundtrip(self, p1_run_small):
        op, _, registry, _ = p1_run_small
        text = registry.dumps()
        again = BoundRegistry.from_dict(json.loads(text), op)
        assert again.dumps() == text

    def test_stored_ystar_is_consistent(self, p1_run_small):
        op, _, registry, _ = p1_run_small
        for sub in registry.subdomains:
            for mu, bb, y in zip(sub.sample.points, sub.sample.betabar, sub.sample.ystar):
                assert op.coefficients(mu) @ y == pytest.approx(bb, abs=1e-9)

    def test_bad_schema(self, p1_run_small):
        op, _, registry, _ = p1_run_small
        data = registry.to_dict()
        data["schema"] = "other/9"
        with pytest.raises(ValueError):
            BoundRegistry.from_dict(data, op)

    def test_empty_registry(self, p1_small):
        with pytest.raises(EmptySample):
            global_ub(BoundRegistry(), p1_small, (1.0, 1.0))

    def test_nonpositive_ub(self, p1_small):
        sub = Subdomain((1.0, 1.0), 1.0, (1.0, 1.0, 1.0), ScmSample())
        sub.sample.append((1.0, 1.0), p1_small.coefficients((1.0, 1.0)), 0.0, np.zeros(3), np.zeros(6))
        reg = BoundRegistry(subdomains=[sub])
        with pytest.raises(NonpositiveUpperBound):
            epsilon_global(reg, p1_small, (1.0, 1.0))


@settings(max_examples=40, deadline=None)
@given(theta=st.lists(st.floats(-10, 10), min_size=1, max_size=5), seed=st.integers(0, 1000))
def test_theta_hat_is_square_of_quadratic_form(theta, seed):
    # theta_hat . z(w) == |sum theta_q v_q|^2 / |w|^2 for v_q = T_q w.
    rng = np.random.default_rng(seed)
    q = len(theta)
    vs = rng.standard_normal((q, 4))
    pairs = QhatExpansion(q).index_pairs
    z = np.array([vs[a] @ vs[b] for a, b in pairs])
    combined = np.asarray(theta) @ vs
    assert theta_hat_from_theta(theta) @ z == pytest.approx(combined @ combined, rel=1e-9, abs=1e-9)
