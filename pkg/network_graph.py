"""
网络图模块
稀疏加权有向图的表示, 平均权重与谱半径计算
"""

import math
import logging
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from exceptions import EmptyGraphError, GraphValidationError, NonConvergentError

logger = logging.getLogger(__name__)


class Graph:
    """
    加权有向图

    边 (i, j) 的权重 W_ij > 0 存储在 out_csr 的第 i 行, 同时在 in_csr 的第 j 行
    保存同一条边, 用于按入边聚合 y_j = sum_i W_ij x_i. 构造后不再修改,
    可以在多个线程之间只读共享.
    """

    def __init__(
        self,
        n: int,
        sources: Sequence[int],
        targets: Sequence[int],
        weights: Sequence[float],
        labels: Optional[List[str]] = None,
        communities: Optional[Sequence[int]] = None
    ):
        """
        初始化图

        Args:
            n: 节点数量
            sources: 每条边的起点
            targets: 每条边的终点
            weights: 每条边的权重 (必须为正)
            labels: 节点标签 (读取边列表文件时保留的原始名称)
            communities: 节点所属社区编号 (生成器已知分块时提供)
        """
        if n < 0:
            raise GraphValidationError(f"节点数量不能为负: {n}")

        src = np.asarray(sources, dtype=np.int64).ravel()
        dst = np.asarray(targets, dtype=np.int64).ravel()
        w = np.asarray(weights, dtype=float).ravel()

        if not (len(src) == len(dst) == len(w)):
            raise GraphValidationError("起点, 终点和权重的长度不一致")
        if len(src) > 0:
            if src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n:
                raise GraphValidationError(f"节点编号超出范围 [0, {n})")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise GraphValidationError("所有边权重必须为有限正数")
            keys = src * n + dst
            if len(np.unique(keys)) != len(keys):
                raise GraphValidationError("存在重复的边 (i, j)")

        self.n = int(n)
        self.m = int(len(src))

        self.out_csr = sp.csr_matrix((w, (src, dst)), shape=(self.n, self.n))
        self.out_csr.sort_indices()
        self.in_csr = self.out_csr.T.tocsr()
        self.in_csr.sort_indices()

        if labels is not None and len(labels) != self.n:
            raise GraphValidationError("标签数量与节点数量不一致")
        self.labels = list(labels) if labels is not None else None

        if communities is not None:
            communities = np.asarray(communities, dtype=np.int64)
            if communities.shape != (self.n,):
                raise GraphValidationError("社区标记数量与节点数量不一致")
        self.communities = communities

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[Tuple],
        default_weight: float = 1.0,
        labels: Optional[List[str]] = None,
        communities: Optional[Sequence[int]] = None
    ) -> "Graph":
        """
        由 (i, j) 或 (i, j, w) 三元组构造有向图

        也用于手工重建论文图示中只给出图形的网络.
        """
        src, dst, w = [], [], []
        for edge in edges:
            src.append(edge[0])
            dst.append(edge[1])
            w.append(edge[2] if len(edge) > 2 else default_weight)
        return cls(n, src, dst, w, labels=labels, communities=communities)

    @classmethod
    def from_undirected_edges(
        cls,
        n: int,
        pairs: Iterable[Tuple[int, int]],
        weight: float,
        communities: Optional[Sequence[int]] = None
    ) -> "Graph":
        """双向边拆成两条等权重的有向边"""
        src, dst = [], []
        for i, j in pairs:
            src.extend((i, j))
            dst.extend((j, i))
        return cls(n, src, dst, [weight] * len(src), communities=communities)

    def edges(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """按 (起点, 终点) 升序返回全部边的数组"""
        coo = self.out_csr.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order].astype(np.int64), coo.col[order].astype(np.int64), coo.data[order]

    def out_neighbors(self, i: int) -> List[Tuple[int, float]]:
        """节点i的出边 [(j, W_ij), ...]"""
        start, end = self.out_csr.indptr[i], self.out_csr.indptr[i + 1]
        return list(zip(self.out_csr.indices[start:end].tolist(), self.out_csr.data[start:end].tolist()))

    def in_neighbors(self, j: int) -> List[Tuple[int, float]]:
        """节点j的入边 [(i, W_ij), ...]"""
        start, end = self.in_csr.indptr[j], self.in_csr.indptr[j + 1]
        return list(zip(self.in_csr.indices[start:end].tolist(), self.in_csr.data[start:end].tolist()))

    @property
    def out_adj(self) -> List[List[Tuple[int, float]]]:
        return [self.out_neighbors(i) for i in range(self.n)]

    @property
    def in_adj(self) -> List[List[Tuple[int, float]]]:
        return [self.in_neighbors(j) for j in range(self.n)]

    def out_degree(self) -> np.ndarray:
        """出度 (出邻居个数, 不计权重)"""
        return np.diff(self.out_csr.indptr)

    def out_frontier(self, active: np.ndarray) -> np.ndarray:
        """活跃节点的全部出邻居 (升序, 去重)"""
        if len(active) == 0:
            return np.empty(0, dtype=np.int64)
        return np.unique(self.out_csr[active].indices)

    def dense(self) -> np.ndarray:
        """稠密邻接矩阵 W (只用于小图的校验)"""
        return self.out_csr.toarray()

    def label_of(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def mean_weight(graph: Graph) -> float:
    """
    平均边权重 alpha = sum W_ij / |E|

    所有权重相同时直接返回该权重, 保证均匀权重网络得到精确的 alpha.
    """
    if graph.m == 0:
        raise EmptyGraphError("图中没有边, 无法计算平均权重")
    w = graph.out_csr.data
    if np.all(w == w[0]):
        return float(w[0])
    return math.fsum(w.tolist()) / graph.m


def spectral_radius(graph: Graph, tol: float = 1e-10, max_iter: int = 10000) -> float:
    """
    计算 rho(W)

    W 非负, 先按强连通分量分块: 谱半径等于各分量子矩阵谱半径的最大值,
    无自环的单点分量贡献 0 (有向无环图因此直接得到 0). 每个不可约分量上对
    W + I 做幂迭代, 用 Collatz-Wielandt 上下界之差作为收敛判据.

    Args:
        graph: 输入图
        tol: 上下界之差的容差
        max_iter: 每个分量的最大迭代次数

    Returns:
        谱半径
    """
    if graph.n < 1:
        raise EmptyGraphError("空图没有谱半径")
    if graph.m == 0:
        return 0.0

    n_comp, labels = connected_components(graph.out_csr, directed=True, connection='strong')
    diag = graph.out_csr.diagonal()
    rho = 0.0

    for comp in range(n_comp):
        members = np.flatnonzero(labels == comp)
        if len(members) == 1:
            rho = max(rho, float(diag[members[0]]))
            continue

        block = graph.out_csr[members][:, members] + sp.identity(len(members), format='csr')
        v = np.ones(len(members))
        for _ in range(max_iter):
            w = block @ v
            ratios = w / v
            lo, hi = ratios.min(), ratios.max()
            if hi - lo <= tol * max(1.0, hi):
                rho = max(rho, 0.5 * (lo + hi) - 1.0)
                break
            v = w / hi
        else:
            raise NonConvergentError(f"谱半径幂迭代在 {max_iter} 步内未收敛")

    return rho


def is_weakly_connected(graph: Graph) -> bool:
    """忽略方向后图是否连通"""
    if graph.n == 0:
        return False
    n_comp, _ = connected_components(graph.out_csr, directed=True, connection='weak')
    return n_comp == 1
