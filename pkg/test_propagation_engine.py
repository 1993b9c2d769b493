"""
传播引擎测试
边界函数, GIP单步更新, 总影响力评估, 以及与稠密参考实现和MLT/ELT模型的对照
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bound_schedules import (
    EicLimitBounds,
    ExplicitBounds,
    StepBounds,
    ThresholdTypeBounds,
    bound_eval,
    make_schedule,
)
from dense_reference import (
    chain_graph,
    dense_linear_trajectory,
    dense_simulate,
    random_graph,
    random_initial_state,
    star_graph,
)
from network_graph import Graph, mean_weight
from propagation_engine import (
    MltParams,
    PropagationConfig,
    elt_step,
    evaluate_batch,
    evaluate_influence,
    evaluate_mlt,
    gip_step,
    mlt_step,
)

SEEDS = st.integers(0, 2 ** 32 - 1)


def _leaves_seeded(graph: Graph, leaves: int = 4) -> np.ndarray:
    x0 = np.zeros(graph.n)
    x0[1:leaves + 1] = 1.0
    return x0


class TestBoundSchedules:
    """边界函数"""

    @pytest.mark.parametrize('y, expected', [(2.0, 2.0), (0.5, 0.0), (7.0, 4.0), (1.0, 1.0), (4.0, 4.0)])
    def test_bound_eval(self, y, expected):
        schedule = ExplicitBounds({1: (1.0, 4.0)})
        assert bound_eval(schedule, 0, 1, y) == expected

    def test_elt_boundary_included(self):
        schedule = ExplicitBounds({1: (0.3, 0.3)})
        assert bound_eval(schedule, 0, 1, 0.3) == 0.3
        assert bound_eval(schedule, 0, 1, 0.3 - 1e-12) == 0.0

    def test_threshold_type_formula(self):
        schedule = ThresholdTypeBounds(theta_l=2.0, theta_h=4.0, alpha=0.1, l0=1.0, h0=1.5)
        assert schedule.node_bounds(0, 0) == (1.0, 1.5)
        lower, upper = schedule.node_bounds(0, 3)
        assert lower == pytest.approx(0.2 ** 3)
        assert upper == pytest.approx(4.0 * 2.0 ** 2 * 0.1 ** 3 * 1.5)

    def test_per_node_parameters(self):
        schedule = ThresholdTypeBounds(theta_l=np.array([1.0, 2.0]), theta_h=np.array([2.0, 4.0]), alpha=0.1)
        bounds = schedule.bounds_at(1, 2)
        np.testing.assert_allclose(bounds.lower, [0.1, 0.2])
        np.testing.assert_allclose(bounds.upper, [0.2, 0.4])

    def test_eic_limit_is_unbounded(self):
        bounds = EicLimitBounds().bounds_at(5, 3)
        assert bounds.upper is None
        np.testing.assert_array_equal(bounds.lower, 0.0)

    def test_invalid_threshold_parameters(self):
        with pytest.raises(ValueError):
            ThresholdTypeBounds(theta_l=2.0, theta_h=1.0, alpha=0.1)
        with pytest.raises(ValueError):
            ThresholdTypeBounds(theta_l=1.0, theta_h=1.0, alpha=0.0)
        with pytest.raises(ValueError):
            ThresholdTypeBounds(theta_l=1.0, theta_h=1.0, alpha=0.1, l0=2.0, h0=1.0)

    def test_explicit_checks_order(self):
        schedule = ExplicitBounds(lambda t: (1.0, 0.5))
        with pytest.raises(ValueError):
            schedule.bounds_at(1, 2)

    def test_make_schedule(self):
        assert make_schedule(None, None, 0.1).is_eic_limit
        schedule = make_schedule(2.0, None, 0.1)
        assert schedule.theta_h == 2.0

    def test_clip_on_matrix(self):
        bounds = StepBounds(lower=np.array([1.0, 2.0]), upper=np.array([3.0, 2.5]))
        y = np.array([[0.5, 1.5, 4.0], [2.0, 2.4, 9.0]])
        np.testing.assert_array_equal(bounds.clip(y), [[0.0, 1.5, 3.0], [2.0, 2.4, 2.5]])


class TestGipStep:
    """GIP单步更新"""

    def test_zero_state_is_absorbing(self):
        graph = star_graph()
        schedule = make_schedule(2.0, 4.0, 0.1)
        np.testing.assert_array_equal(gip_step(graph, np.zeros(graph.n), schedule, 1), 0.0)

    @pytest.mark.parametrize('theta_h, expected', [(4.0, 0.4), (2.0, 0.2)])
    def test_star_center(self, theta_h, expected):
        graph = star_graph(4, 0.1)
        schedule = ThresholdTypeBounds(2.0, theta_h, mean_weight(graph))
        x = gip_step(graph, _leaves_seeded(graph), schedule, 1)
        assert x[0] == pytest.approx(expected)
        np.testing.assert_array_equal(x[1:], 0.0)

    def test_rejects_time_zero(self):
        graph = star_graph()
        with pytest.raises(ValueError):
            gip_step(graph, np.zeros(graph.n), make_schedule(1.0, 1.0, 0.1), 0)

    @pytest.mark.parametrize('theta_h, pendant', [(2.0, 0.0), (3.0, 0.0), (4.0, 0.04), (5.0, 0.04), (8.0, 0.04)])
    def test_pendant_activation_dichotomy(self, theta_h, pendant):
        """4星加悬挂点: θ_l = 2 时悬挂点在 t=2 激活当且仅当 θ_h >= θ_l²"""
        graph = star_graph(4, 0.1, pendant=True)
        schedule = ThresholdTypeBounds(2.0, theta_h, 0.1)
        x1 = gip_step(graph, _leaves_seeded(graph), schedule, 1)
        x2 = gip_step(graph, x1, schedule, 2)
        assert x2[5] == pytest.approx(pendant, abs=1e-15)
        assert (x2[5] > 0) == (theta_h >= 4.0)

    def test_pendant_agrees_with_dense_reference(self):
        graph = star_graph(4, 0.1, pendant=True)
        for theta_h in (2.0, 4.0):
            schedule = ThresholdTypeBounds(2.0, theta_h, 0.1)
            run = dense_simulate(graph, schedule, _leaves_seeded(graph), steps=2)
            result = evaluate_influence(
                graph, schedule, PropagationConfig(record_trajectory=True), _leaves_seeded(graph)
            )
            t, nodes, values = result.trajectory[2]
            sparse_x2 = np.zeros(graph.n)
            sparse_x2[nodes] = values
            assert t == 2
            np.testing.assert_array_equal(sparse_x2, run.states[2])


class TestEvaluateInfluence:
    """总影响力评估"""

    def test_chain_eic(self):
        result = evaluate_influence(chain_graph([0.5]), EicLimitBounds(), PropagationConfig(), np.array([1.0, 0.0]))
        assert result.total == pytest.approx(0.5)
        assert result.steps == 2
        assert result.converged

    def test_zero_initial_state(self):
        graph = star_graph()
        result = evaluate_influence(graph, make_schedule(1.0, 1.0, 0.1), PropagationConfig(), np.zeros(graph.n))
        assert result.total == 0.0
        assert result.converged

    def test_blocked_star_center(self):
        """中心单独作为种子, θ_l = θ_h = 2 时每个叶子只有一个活跃邻居"""
        graph = star_graph(4, 0.1)
        x0 = np.zeros(graph.n)
        x0[0] = 1.0
        result = evaluate_influence(graph, make_schedule(2.0, 2.0, 0.1), PropagationConfig(), x0)
        assert result.total == 0.0

    def test_series_and_counts(self):
        graph = star_graph(4, 0.1, pendant=True)
        x0 = _leaves_seeded(graph)
        result = evaluate_influence(graph, make_schedule(2.0, 4.0, 0.1), PropagationConfig(record_trajectory=True), x0)
        assert result.n_a_of_t[0] == 4
        assert result.n_a_of_t[1] == 5
        assert result.n_a_of_t[2] == 6
        assert np.all(np.diff(result.s_of_t) >= 0)
        assert result.total == pytest.approx(result.per_node.sum())
        assert result.s_of_t[-1] - result.s_of_t[0] == pytest.approx(result.total)
        assert len(result.active_history) == result.steps + 1

    def test_partial_result_when_not_converged(self):
        graph = Graph.from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)])
        result = evaluate_influence(graph, EicLimitBounds(), PropagationConfig(t_max=5), np.array([1.0, 0.0]))
        assert not result.converged
        assert result.steps == 5
        assert result.total == pytest.approx(5.0)

    def test_invalid_initial_state(self):
        graph = star_graph()
        with pytest.raises(ValueError):
            evaluate_influence(graph, EicLimitBounds(), PropagationConfig(), -np.ones(graph.n))
        with pytest.raises(ValueError):
            evaluate_influence(graph, EicLimitBounds(), PropagationConfig(), np.ones(3))

    @pytest.mark.parametrize('kwargs', [{'gamma': 1.0}, {'gamma': -0.1}, {'eps': 0.0}, {'t_max': 0}])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            PropagationConfig(**kwargs)

    def test_summary_dict(self):
        result = evaluate_influence(chain_graph([0.5]), EicLimitBounds(), PropagationConfig(), np.array([1.0, 0.0]))
        assert result.to_dict() == {'total': result.total, 'steps': 2, 'converged': True}
        assert result.to_dict(include_per_node=True)['per_node'] == pytest.approx([0.0, 0.5])


class TestReferenceEquivalence:
    """稀疏前沿实现与稠密参考实现一致"""

    @settings(max_examples=200, deadline=None)
    @given(seed=SEEDS, gamma=st.sampled_from([0.0, 0.2]))
    def test_matches_dense_simulator(self, seed, gamma):
        rng = np.random.default_rng(seed)
        graph = random_graph(rng)
        alpha = mean_weight(graph) if graph.m else 0.1
        theta_l = rng.uniform(0.5, 3.0)
        theta_h = theta_l * rng.uniform(1.0, 4.0)
        h0 = rng.uniform(1.0, 2.0)
        schedule = ThresholdTypeBounds(theta_l, theta_h, alpha, 1.0, h0)
        x0 = random_initial_state(rng, graph.n, 1.0, h0)

        config = PropagationConfig(gamma=gamma, eps=1e-10, record_trajectory=True)
        result = evaluate_influence(graph, schedule, config, x0)
        run = dense_simulate(graph, schedule, x0, gamma=gamma, eps=1e-10)

        assert result.steps == run.steps
        assert result.total == pytest.approx(run.total, rel=1e-10, abs=1e-10)
        for t, nodes, values in result.trajectory:
            x = np.zeros(graph.n)
            x[nodes] = values
            np.testing.assert_allclose(x, run.states[t], rtol=1e-10, atol=1e-10)

    @settings(max_examples=100, deadline=None)
    @given(seed=SEEDS)
    def test_eic_trajectory_is_linear(self, seed):
        rng = np.random.default_rng(seed)
        graph = random_graph(rng)
        x0 = random_initial_state(rng, graph.n, 0.5, 1.5)
        states = dense_linear_trajectory(graph, x0, 20)

        x = x0
        for t in range(1, 21):
            x = gip_step(graph, x, EicLimitBounds(), t)
            np.testing.assert_allclose(x, states[t], rtol=1e-10, atol=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(seed=SEEDS)
    def test_batch_matches_single_runs(self, seed):
        """批量评估的每一列与单独评估逐位相同"""
        rng = np.random.default_rng(seed)
        graph = random_graph(rng, n_min=2)
        alpha = mean_weight(graph) if graph.m else 0.1
        schedule = make_schedule(rng.uniform(0.5, 2.5), None, alpha)
        columns = np.column_stack([random_initial_state(rng, graph.n) for _ in range(6)])
        config = PropagationConfig(gamma=0.1)

        batch = evaluate_batch(graph, schedule, config, columns)
        for b in range(columns.shape[1]):
            single = evaluate_influence(graph, schedule, config, columns[:, b])
            assert batch.totals[b] == single.total
            assert batch.steps[b] == single.steps
            np.testing.assert_array_equal(batch.per_node[:, b], single.per_node)


class TestModelProperties:
    """单调性, 凹性与极限模型"""

    @settings(max_examples=500, deadline=None)
    @given(seed=SEEDS)
    def test_monotone_in_initial_state(self, seed):
        rng = np.random.default_rng(seed)
        graph = random_graph(rng)
        alpha = mean_weight(graph) if graph.m else 0.1
        theta_l = rng.uniform(0.5, 3.0)
        schedule = ThresholdTypeBounds(theta_l, theta_l * rng.uniform(1.0, 4.0), alpha, 1.0, 2.0)

        x0 = random_initial_state(rng, graph.n, 1.0, 2.0)
        bigger = np.where(x0 > 0, np.minimum(x0 + rng.uniform(0, 1, graph.n), 2.0), 0.0)
        extra = (x0 == 0) & (rng.random(graph.n) < 0.2)
        bigger[extra] = rng.uniform(1.0, 2.0, size=int(extra.sum()))

        config = PropagationConfig()
        small = evaluate_influence(graph, schedule, config, x0).total
        large = evaluate_influence(graph, schedule, config, bigger).total
        assert small <= large + 1e-12

    @settings(max_examples=500, deadline=None)
    @given(seed=SEEDS)
    def test_midpoint_concavity(self, seed):
        """下界不超过 l_min0 w^t 且无上界时, 总影响力满足中点凹性"""
        rng = np.random.default_rng(seed)
        graph = random_graph(rng, n_min=2, max_radius=0.8)
        w = float(graph.out_csr.data.min()) if graph.m else 0.1
        schedule = ExplicitBounds(lambda t: (0.5 * 0.5 * w ** t, None), l0=0.5, h0=1.5)

        support = rng.random(graph.n) < 0.4
        x = np.where(support, rng.uniform(0.5, 1.5, graph.n), 0.0)
        y = np.where(support, rng.uniform(0.5, 1.5, graph.n), 0.0)

        config = PropagationConfig(eps=1e-12)
        s_mid = evaluate_influence(graph, schedule, config, 0.5 * (x + y)).total
        s_x = evaluate_influence(graph, schedule, config, x).total
        s_y = evaluate_influence(graph, schedule, config, y).total
        assert s_mid >= 0.5 * (s_x + s_y) - 1e-9

    @pytest.mark.parametrize('y, expected', [(0.1, 0.0), (0.2, 1.0), (0.3, 1.5), (0.4, 2.0), (0.9, 2.0)])
    def test_mlt_ramp(self, y, expected):
        params = MltParams.from_threshold_bounds(theta_l=2.0, theta_h=4.0, alpha=0.1)
        assert (params.l_prime, params.h_prime, params.m) == pytest.approx((0.2, 0.4, 2.0))
        graph = Graph.from_edges(2, [(0, 1, 1.0)])
        x = mlt_step(graph, np.array([y, 0.0]), params)
        assert x[1] == pytest.approx(expected)
        assert x[0] == 0.0

    def test_mlt_params_validation(self):
        with pytest.raises(ValueError):
            MltParams(l_prime=0.5, h_prime=0.4, m=2.0)
        with pytest.raises(ValueError):
            MltParams(l_prime=0.1, h_prime=0.4, m=0.5)

    @settings(max_examples=100, deadline=None)
    @given(seed=SEEDS, gamma=st.sampled_from([0.0, 0.3]))
    def test_mlt_scaling_identity(self, seed, gamma):
        """x_j(t) = (θ_l α)^t x'_j(t), 总影响力在 γ' = 1 - (1-γ)θ_l α 下相等"""
        rng = np.random.default_rng(seed)
        graph = random_graph(rng, n_min=2)
        alpha = mean_weight(graph) if graph.m else 0.1
        theta_l = rng.uniform(1.0, 3.0)
        theta_h = theta_l * rng.uniform(1.0, 4.0)
        h0 = rng.uniform(1.0, 2.0)
        schedule = ThresholdTypeBounds(theta_l, theta_h, alpha, 1.0, h0)
        params = MltParams.from_threshold_bounds(theta_l, theta_h, alpha, h0)
        x0 = random_initial_state(rng, graph.n, 1.0, h0)

        scale = theta_l * alpha
        x, x_mlt = x0, x0
        for t in range(1, 16):
            x = gip_step(graph, x, schedule, t)
            x_mlt = mlt_step(graph, x_mlt, params)
            np.testing.assert_allclose(x, scale ** t * x_mlt, rtol=1e-10, atol=1e-12)

        gamma_mlt = 1.0 - (1.0 - gamma) * scale
        gip_total = evaluate_influence(graph, schedule, PropagationConfig(gamma=gamma, eps=1e-13), x0).total
        mlt_total = evaluate_mlt(graph, params, PropagationConfig(gamma=gamma_mlt, eps=1e-13), x0).total
        assert gip_total == pytest.approx(mlt_total, rel=1e-10, abs=1e-10)

    def test_elt_boundary(self):
        graph = Graph.from_edges(2, [(0, 1, 1.0)])
        assert elt_step(graph, np.array([0.3, 0.0]), 0.3, 1)[1] == 0.3
        assert elt_step(graph, np.array([0.3 - 1e-9, 0.0]), 0.3, 1)[1] == 0.0

    @settings(max_examples=100, deadline=None)
    @given(seed=SEEDS)
    def test_elt_equals_gip_with_equal_bounds(self, seed):
        rng = np.random.default_rng(seed)
        graph = random_graph(rng)
        theta = rng.uniform(0.01, 0.5, size=graph.n)
        x_prev = random_initial_state(rng, graph.n, 0.5, 2.0, density=0.5)
        t = int(rng.integers(1, 5))
        schedule = ExplicitBounds(lambda _: (theta, theta))
        np.testing.assert_array_equal(elt_step(graph, x_prev, theta, t), gip_step(graph, x_prev, schedule, t))
