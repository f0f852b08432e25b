import math

import numpy as np
import pytest

from spgrad.errors import OracleBudgetError
from spgrad.mdp import make_bandit
from spgrad.oracle import (
    enumerate_trajectories,
    enumerated_performance,
    exact_gradient,
    exact_hessian,
    exact_performance,
    exact_values,
    fd_gradient,
    grid_maximize,
    policy_matrix,
)
from spgrad.policies import ActionIndicatorFeatures, SoftmaxPolicy
from spgrad.rng import substream
from spgrad.safe_updates import lipschitz_constant

from conftest import random_theta


def sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def uniform_policy():
    return SoftmaxPolicy(ActionIndicatorFeatures(), feature_bound=1.0, tau=1.0, n_actions=2)


class TestExactPerformance:
    def test_degenerate_chain(self):
        # both arms pay 1: J = 1 + 0.5 + 0.25
        mdp = make_bandit([1.0, 1.0], gamma=0.5, horizon=3)
        assert exact_performance(mdp, uniform_policy(), np.zeros(1)) == pytest.approx(1.75)

    def test_bandit_sigmoid_closed_form(self, bandit):
        assert exact_performance(bandit.mdp, bandit.policy, np.zeros(1)) == pytest.approx(0.5)
        rng = substream(30, 0)
        for _ in range(10):
            theta = random_theta(rng, 1, scale=2.0)
            j = exact_performance(bandit.mdp, bandit.policy, theta)
            assert j == pytest.approx(sigmoid(theta[0]), rel=1e-12)

    def test_symmetric_rewards_cancel(self):
        mdp = make_bandit([1.0, -1.0], gamma=0.5, horizon=2)
        assert exact_performance(mdp, uniform_policy(), np.zeros(1)) == pytest.approx(0.0, abs=1e-15)

    def test_matches_enumeration(self, two_state, binned_gaussian):
        rng = substream(30, 1)
        for inst in (two_state, binned_gaussian):
            for _ in range(5):
                theta = random_theta(rng, inst.oracle_policy.dim)
                j_dp = exact_performance(inst.mdp, inst.oracle_policy, theta)
                j_enum = enumerated_performance(inst.mdp, inst.oracle_policy, theta)
                assert abs(j_dp - j_enum) <= 1e-10


class TestValueTables:
    def test_consistency_and_bound(self, two_state):
        rng = substream(31, 0)
        spec = two_state.mdp.spec
        v_bound = spec.r_max * (1.0 - spec.gamma**spec.horizon) / (1.0 - spec.gamma)
        for _ in range(10):
            theta = random_theta(rng, two_state.policy.dim)
            tables = exact_values(two_state.mdp, two_state.policy, theta)
            probs = policy_matrix(two_state.mdp, two_state.policy, theta)
            np.testing.assert_allclose(tables.v, (probs * tables.q).sum(axis=1), atol=1e-12)
            assert np.max(np.abs(tables.v)) <= v_bound + 1e-12


class TestExactGradient:
    def test_bandit_sigmoid_derivative(self, bandit):
        result = exact_gradient(bandit.mdp, bandit.policy, np.zeros(1))
        np.testing.assert_allclose(result.grad, [0.25], atol=1e-14)
        rng = substream(32, 0)
        for _ in range(10):
            theta = random_theta(rng, 1, scale=2.0)
            s = sigmoid(theta[0])
            result = exact_gradient(bandit.mdp, bandit.policy, theta)
            assert result.grad[0] == pytest.approx(s * (1 - s), rel=1e-12)

    def test_constant_rewards_zero_gradient(self):
        mdp = make_bandit([0.7, 0.7], gamma=0.5, horizon=3)
        result = exact_gradient(mdp, uniform_policy(), np.array([0.3]))
        np.testing.assert_allclose(result.grad, [0.0], atol=1e-15)

    def test_matches_finite_differences(self, two_state):
        rng = substream(32, 1)
        for _ in range(100):
            theta = random_theta(rng, two_state.policy.dim)
            grad = exact_gradient(two_state.mdp, two_state.policy, theta).grad
            fd = fd_gradient(two_state.mdp, two_state.policy, theta)
            assert np.linalg.norm(grad - fd) <= 1e-6 * max(np.linalg.norm(fd), 1e-12)


class TestExactHessian:
    def test_bandit_inflection_at_zero(self, bandit):
        # second derivative of the sigmoid vanishes at theta = 0
        hess = exact_hessian(bandit.mdp, bandit.policy, np.zeros(1))
        np.testing.assert_allclose(hess, [[0.0]], atol=1e-8)

    def test_constant_rewards_zero_matrix(self):
        mdp = make_bandit([0.7, 0.7], gamma=0.5, horizon=2)
        hess = exact_hessian(mdp, uniform_policy(), np.array([0.2]))
        np.testing.assert_allclose(hess, [[0.0]], atol=1e-9)

    def test_symmetry_and_spectral_bound(self, chain):
        lip = lipschitz_constant(chain.policy.smoothing_constants(), chain.mdp.spec)
        rng = substream(33, 0)
        for _ in range(5):
            theta = random_theta(rng, chain.policy.dim)
            hess = exact_hessian(chain.mdp, chain.policy, theta)
            np.testing.assert_allclose(hess, hess.T, atol=1e-12)
            assert np.linalg.norm(hess, 2) <= lip.value * (1 + 1e-6)


class TestBudget:
    def test_enumeration_budget_enforced(self, two_state):
        theta = np.zeros(two_state.policy.dim)
        with pytest.raises(OracleBudgetError):
            exact_gradient(two_state.mdp, two_state.policy, theta, budget=10)
        with pytest.raises(OracleBudgetError):
            enumerate_trajectories(two_state.mdp, two_state.policy, theta, budget=10)
        # dynamic programming does not enumerate paths and stays available
        exact_performance(two_state.mdp, two_state.policy, theta)

    def test_path_count_matches_combinatorics(self, two_state):
        # 2 states * 2 actions over T=3 gives 64 paths, all positive here
        pairs = enumerate_trajectories(two_state.mdp, two_state.policy, np.zeros(4))
        assert len(pairs) == 64
        assert sum(p for p, _ in pairs) == pytest.approx(1.0, abs=1e-12)


class TestGridMaximize:
    def test_quadratic_bound_argmax(self):
        lip, grad_norm = 2.0, 1.0
        alpha, n, value = grid_maximize(
            lambda a: a * grad_norm**2 - a * a * lip / 2.0 * grad_norm**2, (0.0, 1.0)
        )
        assert n is None
        assert alpha == pytest.approx(0.5, abs=1e-3)
        assert value == pytest.approx(0.25, abs=1e-6)

    def test_two_dimensional_surface(self):
        alpha, n, value = grid_maximize(
            lambda a, n: -((a - 0.3) ** 2) - ((n - 40.0) / 10.0) ** 2,
            (0.0, 1.0),
            (1.0, 100.0),
            resolution=201,
        )
        assert alpha == pytest.approx(0.3, abs=0.01)
        assert n == pytest.approx(40.0, abs=1.0)
        assert value == pytest.approx(0.0, abs=1e-3)

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError):
            grid_maximize(lambda a: a, (1.0, 1.0))
        with pytest.raises(ValueError):
            grid_maximize(lambda a, n: a, (0.0, 1.0), (5.0, 2.0))
