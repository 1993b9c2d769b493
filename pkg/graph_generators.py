"""
合成网络生成模块
双社区随机块模型(SBM), ER随机图, 环形格子网络以及组合网络
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from exceptions import EmptyGraphError, GraphValidationError, OddDegreeError
from network_graph import Graph

logger = logging.getLogger(__name__)

SEED_MASK = (1 << 64) - 1


def sample_seed(base_seed: int, index: int) -> int:
    """第index个样本的随机种子: base_seed XOR index, 与样本执行顺序无关"""
    return (int(base_seed) ^ int(index)) & SEED_MASK


def _check_probability(name: str, value: float):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} 必须在 [0, 1] 之间: {value}")


@dataclass
class SbmConfig:
    """
    双社区随机块模型配置

    节点 0..n1-1 属于社区1, n1..n1+n2-1 属于社区2.
    self_loops=True 时每个节点以所在社区的连边概率额外获得一条自环,
    对应单步期望影响力闭式解中把种子自身计入同社区的约定.
    """
    n1: int = 25
    n2: int = 25
    p1: float = 0.9
    p2: float = 0.9
    p12: float = 0.1
    weight: float = 0.1
    seed: int = 0
    self_loops: bool = False

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError(f"社区大小必须 >= 1: n1={self.n1}, n2={self.n2}")
        for name in ('p1', 'p2', 'p12'):
            _check_probability(name, getattr(self, name))
        if self.weight <= 0:
            raise ValueError(f"边权重必须为正: {self.weight}")

    @property
    def n(self) -> int:
        return self.n1 + self.n2


@dataclass
class CompositeConfig:
    """环形格子 + ER随机图的组合网络配置, 两部分大小均为 lattice_size"""
    lattice_size: int = 25
    lattice_degree: int = 4
    er_prob: Optional[float] = None
    bridge_prob: float = 0.01
    weight: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.lattice_degree % 2 != 0:
            raise OddDegreeError(f"格子网络的度数必须为偶数: {self.lattice_degree}")
        if not 0 <= self.lattice_degree < self.lattice_size:
            raise ValueError(f"格子网络的度数必须小于节点数: d={self.lattice_degree}, n={self.lattice_size}")
        if self.er_prob is None:
            self.er_prob = self.lattice_degree / self.lattice_size
        _check_probability('er_prob', self.er_prob)
        _check_probability('bridge_prob', self.bridge_prob)
        if self.weight <= 0:
            raise ValueError(f"边权重必须为正: {self.weight}")


def _sample_undirected(block: np.ndarray, probs: np.ndarray, rng: np.random.Generator, self_probs=None):
    """
    对每个无序节点对 {i, j} (i < j) 独立抽样, 返回双向边的起点和终点

    Args:
        block: 每个节点的社区编号
        probs: 2x2 社区间连边概率矩阵
        rng: 随机数生成器
        self_probs: 每个节点的自环概率 (None 表示不生成自环)
    """
    n = len(block)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < probs[block[iu], block[ju]]
    iu, ju = iu[keep], ju[keep]

    src = np.concatenate([iu, ju])
    dst = np.concatenate([ju, iu])

    if self_probs is not None:
        loops = np.flatnonzero(rng.random(n) < self_probs)
        src = np.concatenate([src, loops])
        dst = np.concatenate([dst, loops])

    return src, dst


def generate_sbm(cfg: SbmConfig) -> Graph:
    """
    生成双社区随机块模型

    同一个配置和种子总是得到相同的边集合.
    """
    rng = np.random.default_rng(cfg.seed)
    block = np.repeat([0, 1], [cfg.n1, cfg.n2])
    probs = np.array([[cfg.p1, cfg.p12], [cfg.p12, cfg.p2]])
    self_probs = np.where(block == 0, cfg.p1, cfg.p2) if cfg.self_loops else None

    src, dst = _sample_undirected(block, probs, rng, self_probs)
    graph = Graph(cfg.n, src, dst, np.full(len(src), cfg.weight), communities=block)
    logger.debug(f"生成SBM: n={graph.n}, m={graph.m}, seed={cfg.seed}")
    return graph


def generate_er(n: int, p: float, weight: float, seed: int) -> Graph:
    """生成ER随机图 (单社区的SBM), 期望度数 (n-1)p"""
    if n < 1:
        raise ValueError(f"节点数量必须 >= 1: {n}")
    _check_probability('p', p)
    if weight <= 0:
        raise ValueError(f"边权重必须为正: {weight}")

    rng = np.random.default_rng(seed)
    block = np.zeros(n, dtype=np.int64)
    src, dst = _sample_undirected(block, np.array([[p]]), rng)
    return Graph(n, src, dst, np.full(len(src), weight))


def generate_lattice(n: int, d: int, weight: float) -> Graph:
    """
    生成环形格子网络

    节点i与 i±1, ..., i±d/2 (模n) 相连, 每个节点入度和出度均为d.
    """
    if d % 2 != 0:
        raise OddDegreeError(f"格子网络的度数必须为偶数: {d}")
    if not 0 <= d < n:
        raise GraphValidationError(f"格子网络的度数必须小于节点数: d={d}, n={n}")

    pairs = [(i, (i + step) % n) for i in range(n) for step in range(1, d // 2 + 1)]
    return Graph.from_undirected_edges(n, pairs, weight)


def compose_networks(g1: Graph, g2: Graph, p_o: float, weight: float, seed: int) -> Graph:
    """
    组合两个网络

    g2 的节点编号整体平移 n1, 每个跨网络节点对以概率 p_o 加一条双向桥边.
    g1 节点标记为社区0, g2 节点标记为社区1.
    """
    if g1.n == 0 or g2.n == 0:
        raise EmptyGraphError("组合网络的两个部分都不能为空")
    _check_probability('p_o', p_o)

    rng = np.random.default_rng(seed)
    bridge_i, bridge_j = np.nonzero(rng.random((g1.n, g2.n)) < p_o)
    bridge_j = bridge_j + g1.n

    s1, t1, w1 = g1.edges()
    s2, t2, w2 = g2.edges()

    src = np.concatenate([s1, s2 + g1.n, bridge_i, bridge_j])
    dst = np.concatenate([t1, t2 + g1.n, bridge_j, bridge_i])
    w = np.concatenate([w1, w2, np.full(2 * len(bridge_i), weight)])

    communities = np.repeat([0, 1], [g1.n, g2.n])
    logger.debug(f"组合网络: 桥边对数 {len(bridge_i)}")
    return Graph(g1.n + g2.n, src, dst, w, communities=communities)


def count_bridges(graph: Graph, n1: int) -> int:
    """组合网络中跨越两部分的双向边对数"""
    src, dst, _ = graph.edges()
    return int(np.sum((src < n1) & (dst >= n1)))


def generate_composite(cfg: CompositeConfig) -> Graph:
    """生成 环形格子 + ER随机图 的组合网络"""
    er_seed, bridge_seed = np.random.SeedSequence(cfg.seed).generate_state(2)
    lattice = generate_lattice(cfg.lattice_size, cfg.lattice_degree, cfg.weight)
    er = generate_er(cfg.lattice_size, cfg.er_prob, cfg.weight, int(er_seed))
    return compose_networks(lattice, er, cfg.bridge_prob, cfg.weight, int(bridge_seed))
