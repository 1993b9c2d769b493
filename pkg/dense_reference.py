"""
稠密矩阵参考实现
用完整的 W 矩阵逐步计算GIP传播, 线性轨迹和Katz中心性, 作为稀疏实现的对照
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from bound_schedules import BoundSchedule
from network_graph import Graph


@dataclass
class DenseRun:
    """稠密参考传播的结果: 每一步的 y(t), x(t) 以及折扣总影响力"""
    states: List[np.ndarray]
    preimages: List[np.ndarray]
    total: float
    steps: int


def dense_simulate(
    graph: Graph,
    schedule: BoundSchedule,
    x0: np.ndarray,
    gamma: float = 0.0,
    eps: float = 1e-10,
    t_max: int = 10000,
    steps: Optional[int] = None
) -> DenseRun:
    """
    每一步对所有节点计算 y = W^T x(t-1) 并逐元素应用边界函数

    steps 给定时固定运行该步数, 否则按 ||(1-γ)^t x(t)||_∞ < ε 停止.
    """
    W = graph.dense()
    x = np.asarray(x0, dtype=float).copy()
    states, preimages = [x.copy()], [np.zeros(graph.n)]
    total = 0.0
    limit = steps if steps is not None else t_max

    t = 0
    while t < limit:
        t += 1
        y = W.T @ x
        lower, upper = _bounds(schedule, t, graph.n)
        x = np.zeros(graph.n)
        for j in range(graph.n):
            if y[j] < lower[j]:
                x[j] = 0.0
            elif upper is not None and y[j] >= upper[j]:
                x[j] = upper[j]
            else:
                x[j] = y[j]
        states.append(x.copy())
        preimages.append(y)

        contribution = (1.0 - gamma) ** t * x
        total += float(contribution.sum())
        if steps is None and graph.n > 0 and contribution.max() < eps:
            break

    return DenseRun(states=states, preimages=preimages, total=total, steps=t)


def _bounds(schedule: BoundSchedule, t: int, n: int):
    pairs = [schedule.node_bounds(j, t) for j in range(n)]
    lower = np.array([p[0] for p in pairs])
    upper = None if any(p[1] is None for p in pairs) else np.array([p[1] for p in pairs])
    return lower, upper


def dense_linear_trajectory(graph: Graph, x0: np.ndarray, horizon: int) -> List[np.ndarray]:
    """EIC极限的轨迹 x(t) = (W^T)^t x(0), t = 0..horizon"""
    W = graph.dense()
    states = [np.asarray(x0, dtype=float)]
    for _ in range(horizon):
        states.append(W.T @ states[-1])
    return states


def dense_katz(graph: Graph, factor: float) -> np.ndarray:
    """直接求解 c = ((I - factor W)^{-1} - I) 1"""
    identity = np.eye(graph.n)
    return (np.linalg.inv(identity - factor * graph.dense()) - identity) @ np.ones(graph.n)


def dense_spectral_radius(graph: Graph) -> float:
    if graph.n == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(graph.dense()))))


def random_graph(
    rng: np.random.Generator,
    n_min: int = 1,
    n_max: int = 30,
    p_range=(0.05, 0.4),
    weight_range=(0.05, 0.3),
    max_radius: Optional[float] = None
) -> Graph:
    """
    随机加权有向图 (无自环)

    max_radius 给定时把全部权重按比例缩小, 使 rho(W) 不超过该值.
    """
    n = int(rng.integers(n_min, n_max + 1))
    p = rng.uniform(*p_range)
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    src, dst = np.nonzero(mask)
    weights = rng.uniform(*weight_range, size=len(src))

    graph = Graph(n, src, dst, weights)
    if max_radius is not None and graph.m > 0:
        rho = dense_spectral_radius(graph)
        if rho > max_radius:
            graph = Graph(n, src, dst, weights * (max_radius / rho))
    return graph


def random_initial_state(
    rng: np.random.Generator,
    n: int,
    l0: float = 1.0,
    h0: float = 1.0,
    density: float = 0.3
) -> np.ndarray:
    """合法的初始状态: 每个分量为 0 或 [l0, h0] 中的值"""
    support = rng.random(n) < density
    values = rng.uniform(l0, h0, size=n) if h0 > l0 else np.full(n, l0)
    return np.where(support, values, 0.0)


def star_graph(leaves: int = 4, weight: float = 0.1, pendant: bool = False) -> Graph:
    """
    以0为中心的双向星形图, 叶子为 1..leaves

    pendant=True 时再加一个只与中心相连的节点 leaves+1.
    """
    n = leaves + 1 + (1 if pendant else 0)
    pairs = [(0, i) for i in range(1, n)]
    return Graph.from_undirected_edges(n, pairs, weight)


def chain_graph(weights: Sequence[float], n: Optional[int] = None) -> Graph:
    """有向链 0 -> 1 -> 2 -> ..., 第i条边的权重为 weights[i]"""
    n = n if n is not None else len(weights) + 1
    return Graph.from_edges(n, [(i, i + 1, w) for i, w in enumerate(weights)])
