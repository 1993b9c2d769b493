"""
求解质量指标
相对全局最优的准确率 τ, 排名 φ, 以及蒙特卡洛样本统计量
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Sequence, Union

import numpy as np
from scipy import stats

from exceptions import DegenerateOptimumError
from im_problem import RankingTable

logger = logging.getLogger(__name__)


def accuracy(s: float, ranking: Union[RankingTable, float]) -> float:
    """
    准确率 τ = s / s*

    Args:
        s: 待评价解的目标值
        ranking: 穷举排名表或直接给出的全局最优值 s*

    Returns:
        τ, s* = 0 且 s = 0 时为 1
    """
    best = ranking.best if isinstance(ranking, RankingTable) else float(ranking)
    if best == 0.0:
        if s == 0.0:
            return 1.0
        raise DegenerateOptimumError(f"全局最优值为0, 但给定解的目标值为 {s}")
    return float(s) / best


def rank_metric(seed_set: Union[Iterable[int], float], ranking: RankingTable) -> float:
    """
    排名 φ = (#{A : s(A) > s(A0)} + 1) / C(n,k)

    目标值相同的集合共享最好的名次. seed_set 也可以直接是目标值.
    """
    if isinstance(seed_set, (int, float, np.floating)) and not isinstance(seed_set, bool):
        value = float(seed_set)
    else:
        value = ranking.objective_of(seed_set)
    better = int(np.searchsorted(-ranking.objectives, -value, side='left'))
    return (better + 1) / len(ranking)


@dataclass(frozen=True)
class SampleSummary:
    """蒙特卡洛样本的均值, 标准误和标准差"""
    mean: float
    se: float
    sd: float
    count: int

    def within(self, target: float, n_se: float = 3.0, atol: float = 1e-12) -> bool:
        """均值与目标值之差是否在 n_se 个标准误以内"""
        se = 0.0 if np.isnan(self.se) else self.se
        return abs(self.mean - target) <= n_se * se + atol

    def to_dict(self) -> Dict:
        return {'mean': self.mean, 'se': self.se, 'sd': self.sd, 'count': self.count}


def summarize(samples: Sequence[float]) -> SampleSummary:
    """样本统计量, 只有一个样本时标准误和标准差为 nan"""
    values = np.asarray(samples, dtype=float)
    if len(values) == 0:
        raise ValueError("样本为空")
    if len(values) == 1:
        return SampleSummary(mean=float(values[0]), se=float('nan'), sd=float('nan'), count=1)
    return SampleSummary(
        mean=float(values.mean()),
        se=float(stats.sem(values)),
        sd=float(values.std(ddof=1)),
        count=len(values)
    )


def difference_summary(first: Sequence[float], second: Sequence[float]) -> SampleSummary:
    """成对样本之差的统计量, 用于比较两组种子集合"""
    a, b = np.asarray(first, dtype=float), np.asarray(second, dtype=float)
    if a.shape != b.shape:
        raise ValueError("成对样本长度不一致")
    return summarize(a - b)
