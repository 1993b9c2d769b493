"""
中心性计算模块
Katz中心性与度中心性, 以及按得分选取前k个节点
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Union

import numpy as np

from exceptions import DivergentSeriesError, KTooLargeError, NonConvergentError
from network_graph import Graph, spectral_radius

logger = logging.getLogger(__name__)


class CentralityKind(Enum):
    """中心性类型"""
    KATZ = "katz"
    DEGREE = "degree"


@dataclass(frozen=True)
class CentralityVector:
    """逐节点中心性得分"""
    values: np.ndarray
    kind: CentralityKind
    factor: Optional[float] = None

    def __len__(self):
        return len(self.values)


class NetworkCentrality:
    """中心性计算类"""

    @staticmethod
    def katz_centrality(
        graph: Graph,
        factor: float,
        tol: float = 1e-10,
        max_iter: int = 100000
    ) -> CentralityVector:
        """
        Katz中心性 c = ((I - factor W)^{-1} - I) 1

        用截断级数 sum_{t>=1} factor^t W^t 1 计算, 即从节点i出发的加权路径数
        (行和), 单步增量的最大分量小于 tol 时停止.

        Args:
            graph: 网络
            factor: 衰减因子, 影响力最大化中取 1-γ
            tol: 增量容差
            max_iter: 最大迭代次数

        Returns:
            CentralityVector
        """
        if not 0 < factor <= 1:
            raise ValueError(f"Katz因子必须在 (0, 1] 之间: {factor}")

        rho = spectral_radius(graph)
        if factor * rho >= 1.0:
            raise DivergentSeriesError(f"Katz级数发散: factor * rho(W) = {factor * rho:.6g} >= 1")

        walk = np.ones(graph.n)
        values = np.zeros(graph.n)
        for _ in range(max_iter):
            walk = factor * (graph.out_csr @ walk)
            values += walk
            if graph.n == 0 or walk.max() < tol:
                return CentralityVector(values=values, kind=CentralityKind.KATZ, factor=factor)

        raise NonConvergentError(f"Katz级数在 {max_iter} 步内未收敛")

    @staticmethod
    def degree_centrality(graph: Graph) -> CentralityVector:
        """度中心性: 出邻居个数"""
        return CentralityVector(values=graph.out_degree().astype(float), kind=CentralityKind.DEGREE)

    @staticmethod
    def top_k(c: CentralityVector, h0: Union[float, np.ndarray], k: int) -> List[int]:
        """
        选出 h_{j,0} c_j 最大的k个节点

        得分相同时编号小的节点优先.

        Args:
            c: 中心性
            h0: 初始状态上界 (标量或逐节点数组)
            k: 节点个数

        Returns:
            升序的节点编号列表
        """
        n = len(c)
        if not 1 <= k <= n:
            raise KTooLargeError(f"k 必须在 [1, {n}] 之间: {k}")
        scores = np.broadcast_to(np.asarray(h0, dtype=float), (n,)) * c.values
        order = np.lexsort((np.arange(n), -scores))
        return sorted(order[:k].tolist())
