"""
传播引擎
GIP模型及其极限情形(ELT, MLT)的迭代, 以及总影响力评估
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from bound_schedules import BoundSchedule, StepBounds
from network_graph import Graph

logger = logging.getLogger(__name__)

Transfer = Callable[[int, np.ndarray], np.ndarray]


@dataclass
class PropagationConfig:
    """传播参数: 时间折扣 γ, 收敛容差 ε, 最大步数"""
    gamma: float = 0.0
    eps: float = 1e-10
    t_max: int = 10000
    record_trajectory: bool = False

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma 必须在 [0, 1) 之间: {self.gamma}")
        if not self.eps > 0:
            raise ValueError(f"eps 必须为正: {self.eps}")
        if self.t_max < 1:
            raise ValueError(f"t_max 必须 >= 1: {self.t_max}")


@dataclass
class PropagationResult:
    """单次传播的结果"""
    total: float
    per_node: np.ndarray
    steps: int
    converged: bool
    s_of_t: np.ndarray
    n_a_of_t: np.ndarray
    trajectory: Optional[List[Tuple[int, np.ndarray, np.ndarray]]] = None
    active_history: Optional[List[np.ndarray]] = None

    def to_dict(self, include_per_node: bool = False) -> Dict:
        summary = {'total': self.total, 'steps': self.steps, 'converged': self.converged}
        if include_per_node:
            summary['per_node'] = self.per_node.tolist()
        return summary


@dataclass
class BatchResult:
    """批量传播结果, 每一列对应一个初始状态"""
    totals: np.ndarray
    per_node: np.ndarray
    steps: np.ndarray
    converged: np.ndarray

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))


def aggregate(graph: Graph, x_prev: np.ndarray) -> np.ndarray:
    """
    线性聚合 y_j = sum_i W_ij x_i

    只访问活跃节点的出邻居 (稀疏前沿). x_prev 为 (n,) 或 (n, B).
    """
    matrix = x_prev if x_prev.ndim == 2 else x_prev[:, None]
    y = np.zeros(matrix.shape)

    active = np.flatnonzero(matrix.any(axis=1))
    frontier = graph.out_frontier(active)
    if len(frontier) == graph.n:
        y = np.asarray(graph.in_csr @ matrix)
    elif len(frontier) > 0:
        y[frontier] = graph.in_csr[frontier] @ matrix

    return y if x_prev.ndim == 2 else y[:, 0]


class GipTransfer:
    """由边界函数得到的逐步非线性变换"""

    def __init__(self, schedule: BoundSchedule, n: int):
        self.schedule = schedule
        self.n = n
        self._cache: Dict[int, StepBounds] = {}

    def bounds(self, t: int) -> StepBounds:
        if t not in self._cache:
            self._cache[t] = self.schedule.bounds_at(t, self.n)
        return self._cache[t]

    def __call__(self, t: int, y: np.ndarray) -> np.ndarray:
        return self.bounds(t).clip(y)


class PropagationEngine:
    """传播引擎"""

    def __init__(self, graph: Graph, transfer: Transfer, config: PropagationConfig):
        """
        初始化传播引擎

        Args:
            graph: 网络
            transfer: 非线性变换 (t, y) -> x(t)
            config: 传播参数
        """
        self.graph = graph
        self.transfer = transfer
        self.config = config

    def step(self, x_prev: np.ndarray, t: int) -> np.ndarray:
        """执行一步传播"""
        return self.transfer(t, aggregate(self.graph, x_prev))

    def _check_state(self, x0: np.ndarray) -> np.ndarray:
        x0 = np.array(x0, dtype=float)
        if x0.shape[0] != self.graph.n:
            raise ValueError(f"初始状态长度 {x0.shape[0]} 与节点数 {self.graph.n} 不一致")
        if not np.all(np.isfinite(x0)) or np.any(x0 < 0):
            raise ValueError("初始状态必须为有限非负数")
        return x0

    def _iterate(self, x0: np.ndarray, observer: Callable = None):
        """
        逐列迭代直到 ||(1-γ)^t x(t)||_∞ < ε 或达到 t_max

        已收敛的列不再参与后续计算, 因此每一列的结果与单独计算完全一致.
        """
        cfg = self.config
        n, width = x0.shape
        state = x0.copy()
        per_node = np.zeros((n, width))
        steps = np.zeros(width, dtype=np.int64)
        converged = np.zeros(width, dtype=bool)
        alive = np.ones(width, dtype=bool)

        t = 0
        while alive.any() and n > 0:
            t += 1
            cols = np.flatnonzero(alive)
            x = self.step(state[:, cols], t)

            contribution = (1.0 - cfg.gamma) ** t * x
            per_node[:, cols] += contribution
            state[:, cols] = x
            steps[cols] = t

            done = contribution.max(axis=0) < cfg.eps
            converged[cols[done]] = True
            alive[cols[done]] = False

            if observer is not None:
                observer(t, x, contribution)

            if t >= cfg.t_max:
                alive[:] = False

        if n == 0:
            converged[:] = True

        totals = np.ascontiguousarray(per_node.T).sum(axis=1)
        return totals, per_node, steps, converged

    def run(self, x0: np.ndarray) -> PropagationResult:
        """
        单个初始状态的传播 (影响力评估)

        Args:
            x0: 初始状态 x(0)

        Returns:
            PropagationResult, total 不含 t=0 项
        """
        x0 = self._check_state(x0)
        record = self.config.record_trajectory

        cumulative = x0.copy()
        s_series = [float(x0.sum())]
        na_series = [int(np.count_nonzero(cumulative))]
        trajectory = [(0, np.flatnonzero(x0), x0[x0 > 0])] if record else None
        history = [np.flatnonzero(x0)] if record else None

        def observer(t, x, contribution):
            x = x[:, 0]
            cumulative[:] += contribution[:, 0]
            s_series.append(s_series[-1] + float(contribution.sum()))
            na_series.append(int(np.count_nonzero(cumulative)))
            if record:
                nodes = np.flatnonzero(x)
                trajectory.append((t, nodes, x[nodes]))
                history.append(nodes)

        totals, per_node, steps, converged = self._iterate(x0[:, None], observer)

        if not converged[0]:
            logger.warning(f"传播在 t_max={self.config.t_max} 步内未收敛, 返回部分和")

        return PropagationResult(
            total=float(totals[0]),
            per_node=per_node[:, 0],
            steps=int(steps[0]),
            converged=bool(converged[0]),
            s_of_t=np.array(s_series),
            n_a_of_t=np.array(na_series, dtype=np.int64),
            trajectory=trajectory,
            active_history=history
        )

    def run_batch(self, x0_columns: np.ndarray) -> BatchResult:
        """
        多个初始状态同时传播

        Args:
            x0_columns: (n, B) 矩阵, 每一列是一个初始状态

        Returns:
            BatchResult
        """
        x0 = self._check_state(x0_columns)
        if x0.ndim != 2:
            raise ValueError("批量初始状态必须是 (n, B) 矩阵")
        totals, per_node, steps, converged = self._iterate(x0)
        return BatchResult(totals=totals, per_node=per_node, steps=steps, converged=converged)


def gip_step(graph: Graph, x_prev: np.ndarray, schedule: BoundSchedule, t: int) -> np.ndarray:
    """
    GIP模型一步更新 x_j(t) = f_{j,t}(sum_i W_ij x_i(t-1))

    Args:
        graph: 网络
        x_prev: x(t-1)
        schedule: 边界函数
        t: 当前时间步 (>= 1)
    """
    if t < 1:
        raise ValueError(f"时间步必须 >= 1: {t}")
    return schedule.bounds_at(t, graph.n).clip(aggregate(graph, np.asarray(x_prev, dtype=float)))


def evaluate_influence(
    graph: Graph,
    schedule: BoundSchedule,
    config: PropagationConfig,
    x0: np.ndarray
) -> PropagationResult:
    """总影响力评估 s = sum_j sum_{t>=1} (1-γ)^t x_j(t)"""
    engine = PropagationEngine(graph, GipTransfer(schedule, graph.n), config)
    return engine.run(x0)


def evaluate_batch(
    graph: Graph,
    schedule: BoundSchedule,
    config: PropagationConfig,
    x0_columns: np.ndarray
) -> BatchResult:
    """对 (n, B) 矩阵的每一列评估总影响力, 每列结果与 evaluate_influence 相同"""
    engine = PropagationEngine(graph, GipTransfer(schedule, graph.n), config)
    return engine.run_batch(x0_columns)


def elt_step(
    graph: Graph,
    x_prev: np.ndarray,
    thresholds: Union[float, np.ndarray, Callable[[int], np.ndarray]],
    t: int
) -> np.ndarray:
    """
    ELT模型一步更新: y_j >= θ_{j,t} 时 x_j(t) = θ_{j,t}, 否则为 0

    thresholds 可以是标量, 逐节点数组, 或 t -> 阈值 的函数.
    """
    theta = thresholds(t) if callable(thresholds) else thresholds
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (graph.n,))
    y = aggregate(graph, np.asarray(x_prev, dtype=float))
    return np.where(y >= theta, theta, 0.0)


@dataclass
class MltParams:
    """
    MLT模型参数

    l_prime <= y < h_prime 时状态在 [1, m) 上线性插值, y >= h_prime 时为 m.
    """
    l_prime: Union[float, np.ndarray]
    h_prime: Union[float, np.ndarray]
    m: Union[float, np.ndarray]
    h0_prime: Union[float, np.ndarray] = 1.0

    def __post_init__(self):
        if np.any(np.asarray(self.l_prime) > np.asarray(self.h_prime)):
            raise ValueError("MLT参数需要 l' <= h'")
        if np.any(np.asarray(self.m) < 1):
            raise ValueError("MLT参数需要 m >= 1")

    @classmethod
    def from_threshold_bounds(cls, theta_l: float, theta_h: float, alpha: float, h0: float = 1.0) -> "MltParams":
        """
        阈值型边界 (l_{j,0} = 1) 对应的MLT参数

        l' = θ_l α, h' = θ_h α h0, m = θ_h h0 / θ_l, h'_0 = h0
        """
        return cls(
            l_prime=theta_l * alpha,
            h_prime=theta_h * alpha * h0,
            m=theta_h * h0 / theta_l,
            h0_prime=h0
        )

    def ramp(self, y: np.ndarray) -> np.ndarray:
        """分段线性函数: y < l' 为 0, [l', h') 上从 1 线性增长, y >= h' 为 m"""
        l, h, m = (np.asarray(v, dtype=float) for v in (self.l_prime, self.h_prime, self.m))
        if y.ndim == 2:
            l, h, m = (v[:, None] if v.ndim == 1 else v for v in (l, h, m))
        width = np.where(h > l, h - l, 1.0)
        inner = (m - 1.0) / width * (y - l) + 1.0
        x = np.where(y >= l, inner, 0.0)
        return np.where(y >= h, np.broadcast_to(m, y.shape), x)


def mlt_step(graph: Graph, x_prev: np.ndarray, params: MltParams) -> np.ndarray:
    """MLT模型一步更新"""
    return params.ramp(aggregate(graph, np.asarray(x_prev, dtype=float)))


def evaluate_mlt(graph: Graph, params: MltParams, config: PropagationConfig, x0: np.ndarray) -> PropagationResult:
    """MLT模型的总影响力"""
    engine = PropagationEngine(graph, lambda t, y: params.ramp(y), config)
    return engine.run(x0)
