"""
SBM解析期望测试
闭式解与精确枚举一致, 蒙特卡洛样本均值落在3个标准误以内
"""

import numpy as np
import pytest

from bound_schedules import ThresholdTypeBounds
from graph_generators import SbmConfig, generate_sbm, sample_seed
from propagation_engine import gip_step
from sbm_analytics import (
    expected_block_degrees,
    expected_one_step_influence,
    linear_regime_expectation,
    paired_threshold_expectation,
    seeds_per_block,
    upper_bound_increase,
)
from solution_metrics import summarize

N_B, P_IN, P_OUT, ALPHA = 25, 0.9, 0.1, 0.1
SAME_BLOCK, SPLIT = [0, 1], [0, 25]


def one_step(seeds, theta_l, theta_h, self_loops):
    k1, k2 = seeds_per_block(seeds, N_B)
    return expected_one_step_influence(
        N_B, N_B, P_IN, P_IN, P_OUT, k1, k2, theta_l, theta_h, ALPHA, self_loops=self_loops
    )


class TestOneStepTable:
    """两个种子的单步期望影响力"""

    @pytest.mark.parametrize('theta_l,seeds,self_loops,expected', [
        (1.0, SAME_BLOCK, True, 5.0),
        (1.0, SPLIT, True, 5.0),
        (2.0, SAME_BLOCK, True, 4.1),
        (2.0, SPLIT, True, 0.9),
        (1.0, SAME_BLOCK, False, 4.82),
        (1.0, SPLIT, False, 4.82),
        (2.0, SAME_BLOCK, False, 3.776),
        (2.0, SPLIT, False, 0.864),
    ])
    def test_values(self, theta_l, seeds, self_loops, expected):
        assert one_step(seeds, theta_l, None, self_loops) == pytest.approx(expected)

    def test_eic_limit_matches_linear_regime(self):
        assert one_step(SAME_BLOCK, None, None, True) == pytest.approx(5.0)

    def test_discount(self):
        value = expected_one_step_influence(N_B, N_B, P_IN, P_IN, P_OUT, 2, 0, 2.0, None, ALPHA, gamma=0.5, self_loops=True)
        assert value == pytest.approx(0.5 * 4.1)

    def test_too_many_seeds(self):
        with pytest.raises(ValueError):
            expected_one_step_influence(2, 2, 0.5, 0.5, 0.1, 3, 0, 1.0, None, 0.1)


class TestClosedForms:
    """闭式解与二项分布枚举一致"""

    @pytest.mark.parametrize('p_in,p_out', [(0.9, 0.1), (0.3, 0.12), (0.5, 0.5)])
    def test_linear_regime(self, p_in, p_out):
        for seeds in ((2, 0), (1, 1)):
            enumerated = expected_one_step_influence(N_B, N_B, p_in, p_in, p_out, *seeds, 1.0, None, ALPHA, self_loops=True)
            assert linear_regime_expectation(N_B, p_in, p_out, ALPHA) == pytest.approx(enumerated)

    @pytest.mark.parametrize('p_in,p_out', [(0.9, 0.1), (0.3, 0.12), (0.5, 0.5)])
    def test_paired_threshold(self, p_in, p_out):
        same = expected_one_step_influence(N_B, N_B, p_in, p_in, p_out, 2, 0, 2.0, None, ALPHA, self_loops=True)
        split = expected_one_step_influence(N_B, N_B, p_in, p_in, p_out, 1, 1, 2.0, None, ALPHA, self_loops=True)
        assert paired_threshold_expectation(N_B, p_in, p_out, ALPHA) == pytest.approx(same)
        assert paired_threshold_expectation(N_B, p_in, p_out, ALPHA, split=True) == pytest.approx(split)

    def test_equal_probabilities_remove_community_effect(self):
        assert paired_threshold_expectation(N_B, 0.4, 0.4, ALPHA) == pytest.approx(
            paired_threshold_expectation(N_B, 0.4, 0.4, ALPHA, split=True)
        )

    @pytest.mark.parametrize('split,seeds', [(False, (4, 0)), (True, (2, 2))])
    @pytest.mark.parametrize('p_in,p_out', [(0.9, 0.1), (0.3, 0.12)])
    def test_upper_bound_increase(self, split, seeds, p_in, p_out):
        """上界从 2α l0 提高到 4α l0 的增量"""
        def value(theta_h):
            return expected_one_step_influence(N_B, N_B, p_in, p_in, p_out, *seeds, 2.0, theta_h, ALPHA, self_loops=True)

        assert upper_bound_increase(N_B, p_in, p_out, ALPHA, split=split) == pytest.approx(value(4.0) - value(2.0))


class TestMonteCarlo:
    """在生成的SBM上执行一步GIP"""

    @pytest.mark.parametrize('self_loops', [True, False])
    @pytest.mark.parametrize('theta_l,theta_h', [(1.0, 100.0), (2.0, 2.0)])
    @pytest.mark.parametrize('seeds', [SAME_BLOCK, SPLIT])
    def test_sample_mean(self, seeds, theta_l, theta_h, self_loops):
        schedule = ThresholdTypeBounds(theta_l, theta_h, ALPHA)
        samples = []
        for i in range(1000):
            graph = generate_sbm(SbmConfig(
                n1=N_B, n2=N_B, p1=P_IN, p2=P_IN, p12=P_OUT, weight=ALPHA,
                self_loops=self_loops, seed=sample_seed(101, i)
            ))
            x0 = np.zeros(graph.n)
            x0[seeds] = 1.0
            samples.append(gip_step(graph, x0, schedule, 1).sum())

        expected = one_step(seeds, theta_l, theta_h, self_loops)
        assert summarize(samples).within(expected)


def test_expected_block_degrees():
    assert expected_block_degrees(25, 25, 0.9, 0.9, 0.1) == pytest.approx((24.1, 24.1))
    assert expected_block_degrees(25, 25, 0.9, 0.9, 0.1, self_loops=True) == pytest.approx((25.0, 25.0))
    assert expected_block_degrees(10, 20, 0.5, 0.2, 0.1) == pytest.approx((6.5, 4.8))


def test_seeds_per_block():
    assert seeds_per_block([0, 1, 30], 25) == (2, 1)
    assert seeds_per_block([], 25) == (0, 0)
