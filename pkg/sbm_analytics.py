"""
双社区SBM的解析期望
单步期望影响力 (二项分布精确枚举), 两节点/四节点种子集合的闭式解, 期望度数
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.stats import binom

logger = logging.getLogger(__name__)


def seeds_per_block(seeds: Sequence[int], n1: int) -> Tuple[int, int]:
    """种子集合在两个社区中的个数 (节点 0..n1-1 属于社区1)"""
    seeds = np.asarray(seeds)
    k1 = int(np.sum(seeds < n1))
    return k1, len(seeds) - k1


def _count_pmf(a: int, p: float, b: int, q: float) -> np.ndarray:
    """Bin(a, p) + Bin(b, q) 的分布, 下标为活跃入邻居个数"""
    first = binom.pmf(np.arange(a + 1), a, p) if a > 0 else np.ones(1)
    second = binom.pmf(np.arange(b + 1), b, q) if b > 0 else np.ones(1)
    return np.convolve(first, second)


def _expected_state(pmf: np.ndarray, theta_l: Optional[float], theta_h: Optional[float]) -> float:
    """以 α l0 为单位的 E[x_j(1)]"""
    counts = np.arange(len(pmf), dtype=float)
    if theta_l is None:
        return float(pmf @ counts)
    values = np.where(counts >= theta_l, counts, 0.0)
    if theta_h is not None:
        values = np.where(counts >= theta_h, theta_h, values)
    return float(pmf @ values)


def expected_one_step_influence(
    n1: int,
    n2: int,
    p1: float,
    p2: float,
    p12: float,
    k1: int,
    k2: int,
    theta_l: Optional[float],
    theta_h: Optional[float],
    alpha: float,
    l0: float = 1.0,
    gamma: float = 0.0,
    self_loops: bool = False
) -> float:
    """
    SBM上的单步期望影响力 E[sum_j (1-γ) x_j(1)]

    种子初始状态 x_i(0) = l0 = h0, 阈值型边界在 t=1 时 l = θ_l α l0, h = θ_h α l0,
    节点j的线性聚合值为 α l0 乘以活跃入邻居个数. self_loops=True 时种子自身也以
    所在社区的概率计入, 否则种子只看到同社区的其余种子.

    Args:
        n1, n2: 社区大小
        p1, p2, p12: 社区内和社区间的连边概率
        k1, k2: 两个社区中的种子个数
        theta_l: 下界阈值, None 表示EIC极限
        theta_h: 上界阈值, None 表示无上界
        alpha: 统一边权重
        l0: 种子初始状态
        gamma: 时间折扣
        self_loops: 是否允许自环

    Returns:
        期望影响力
    """
    if not (0 <= k1 <= n1 and 0 <= k2 <= n2):
        raise ValueError(f"种子个数超出社区大小: k1={k1}, k2={k2}")

    total = 0.0
    blocks = ((n1, k1, p1, k2), (n2, k2, p2, k1))
    for size, own, p_in, other in blocks:
        plain = _expected_state(_count_pmf(own, p_in, other, p12), theta_l, theta_h)
        if self_loops:
            total += size * plain
        else:
            seeded = _expected_state(_count_pmf(max(own - 1, 0), p_in, other, p12), theta_l, theta_h)
            total += (size - own) * plain + own * seeded

    return (1.0 - gamma) * alpha * l0 * total


def linear_regime_expectation(n_b: int, p_in: float, p_out: float, alpha: float, l0: float = 1.0, gamma: float = 0.0) -> float:
    """
    θ_l <= 1 时两个种子的单步期望影响力 (同社区或跨社区相同)

    (1-γ) n_b α l0 (2 p_in + 2 p_out), 计入自环的约定
    """
    return (1.0 - gamma) * n_b * alpha * l0 * (2 * p_in + 2 * p_out)


def paired_threshold_expectation(
    n_b: int,
    p_in: float,
    p_out: float,
    alpha: float,
    l0: float = 1.0,
    gamma: float = 0.0,
    split: bool = False
) -> float:
    """
    1 < θ_l <= 2 时两个种子的单步期望影响力

    同社区: (1-γ) n_b 2α l0 (p_in² + p_out²); 跨社区: 2(1-γ) n_b 2α l0 p_in p_out
    """
    if split:
        return 2 * (1.0 - gamma) * n_b * 2 * alpha * l0 * p_in * p_out
    return (1.0 - gamma) * n_b * 2 * alpha * l0 * (p_in ** 2 + p_out ** 2)


def upper_bound_increase(n_b: int, p_in: float, p_out: float, alpha: float, l0: float = 1.0, split: bool = False) -> float:
    """
    四个种子, l_1 = 2α l0, 上界从 2α l0 提高到 4α l0 时单步期望影响力的增量 (不含 1-γ)

    split=False: 四个种子都在社区1; split=True: 两个社区各两个.
    """
    if split:
        return 2 * n_b * alpha * l0 * (
            2 * p_in ** 2 * p_out * (1 - p_out)
            + 2 * p_out ** 2 * p_in * (1 - p_in)
            + 2 * p_in ** 2 * p_out ** 2
        )
    return n_b * alpha * l0 * 2 * (
        2 * p_in ** 3 * (1 - p_in) + 2 * p_out ** 3 * (1 - p_out) + p_in ** 4 + p_out ** 4
    )


def expected_block_degrees(
    n1: int,
    n2: int,
    p1: float,
    p2: float,
    p12: float,
    self_loops: bool = False
) -> Tuple[float, float]:
    """
    两个社区节点的期望出度

    无自环时同社区的候选邻居少一个.
    """
    own1 = n1 if self_loops else n1 - 1
    own2 = n2 if self_loops else n2 - 1
    return own1 * p1 + n2 * p12, n1 * p12 + own2 * p2
