"""
传播分析模块
线性情形的闭式解, EIC等价条件检查, 以及右导数反向传播
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from bound_schedules import BoundSchedule
from centrality import NetworkCentrality
from exceptions import HorizonExceededError
from network_graph import Graph
from propagation_engine import GipTransfer, PropagationConfig, aggregate

logger = logging.getLogger(__name__)

RELATIVE_SLACK = 1e-12


@dataclass(frozen=True)
class EicViolation:
    """
    EIC等价条件的一次违反

    kind:
        lower: l_{j,t} > l_min0 w^t, 下界会截断线性传播
        threshold: l_min0 w^t > h_{j,t}
        saturation: (h0^T W^t)_j > h_{j,t}, 上界会截断线性传播
    """
    node: int
    t: int
    kind: str
    value: float
    limit: float


def eic_closed_form(graph: Graph, gamma: float, x0: np.ndarray) -> float:
    """
    EIC极限下的总影响力 c^T x(0), c 为因子 1-γ 的Katz中心性

    要求 (1-γ) rho(W) < 1, 否则抛出 DivergentSeriesError.
    """
    c = NetworkCentrality.katz_centrality(graph, 1.0 - gamma)
    return float(c.values @ np.asarray(x0, dtype=float))


def validate_eic_limit(
    graph: Graph,
    schedule: BoundSchedule,
    x0: np.ndarray,
    horizon: int,
    l0: Optional[np.ndarray] = None,
    h0: Optional[np.ndarray] = None
) -> List[EicViolation]:
    """
    检查 t <= horizon 内 l_{j,t} <= l_min0 w^t <= h_{j,t} 以及 h0^T W^t_{:,j} <= h_{j,t}

    w 为最小正权重, l_min0 = min_j l_{j,0}. 不单独检查 l_min0 w^t <= h0^T W^t_{:,j}:
    该式不成立的节点没有从 h0 为正的节点出发, 长度为t的入路径, 线性状态与GIP状态都为0,
    所以这里的条件仍然是等价的充分条件. 初始边界依次取参数, 边界函数
    自带的 (l0, h0), 最后退化为 x0 本身 (l0 取 x0 的最小正值).

    Returns:
        违反列表, 为空时说明该时间范围内GIP与EIC模型等价
    """
    if horizon < 1:
        raise ValueError(f"时间范围必须 >= 1: {horizon}")

    n = graph.n
    x0 = np.asarray(x0, dtype=float)
    if l0 is None or h0 is None:
        initial = schedule.initial_bounds(n)
        if initial is not None:
            l0 = initial[0] if l0 is None else l0
            h0 = initial[1] if h0 is None else h0
        else:
            positive = x0[x0 > 0]
            if len(positive) == 0:
                return []
            l0 = np.full(n, positive.min()) if l0 is None else l0
            h0 = x0 if h0 is None else h0

    if graph.m == 0:
        return []

    w = float(graph.out_csr.data.min())
    l_min0 = float(np.min(l0))
    reach = np.broadcast_to(np.asarray(h0, dtype=float), (n,)).copy()
    violations = []

    for t in range(1, horizon + 1):
        bounds = schedule.bounds_at(t, n)
        floor = l_min0 * w ** t
        reach = np.asarray(graph.in_csr @ reach)

        for j in np.flatnonzero(bounds.lower > floor * (1 + RELATIVE_SLACK)):
            violations.append(EicViolation(int(j), t, 'lower', float(bounds.lower[j]), floor))

        if bounds.upper is not None:
            for j in np.flatnonzero(floor > bounds.upper * (1 + RELATIVE_SLACK)):
                violations.append(EicViolation(int(j), t, 'threshold', floor, float(bounds.upper[j])))
            for j in np.flatnonzero(reach > bounds.upper * (1 + RELATIVE_SLACK)):
                violations.append(EicViolation(int(j), t, 'saturation', float(reach[j]), float(bounds.upper[j])))

    if violations:
        logger.debug(f"EIC等价条件共有 {len(violations)} 处违反")
    return violations


def discounted_step_influence(
    graph: Graph,
    schedule: BoundSchedule,
    config: PropagationConfig,
    x0: np.ndarray,
    t: int
) -> float:
    """第t步的折扣影响力 s_t = (1-γ)^t sum_j x_j(t)"""
    transfer = GipTransfer(schedule, graph.n)
    x = np.asarray(x0, dtype=float)
    for r in range(1, t + 1):
        x = transfer(r, aggregate(graph, x))
    return (1.0 - config.gamma) ** t * float(x.sum())


def right_derivative(
    graph: Graph,
    schedule: BoundSchedule,
    config: PropagationConfig,
    x0: np.ndarray,
    t: int
) -> np.ndarray:
    """
    s_t 关于 x(0) 的右导数

    ∂₊s_t = (1-γ)^t W D_1 W D_2 ... W D_t 1, 其中 D_r = Diag(∂₊f_r),
    ∂₊f_{j,r} = 1 当且仅当 l_{j,r} <= y_j(r) < h_{j,r}.

    Args:
        graph: 网络
        schedule: 边界函数
        config: 传播参数 (使用 gamma 和 t_max)
        x0: 初始状态
        t: 时间步

    Returns:
        逐节点右导数向量
    """
    if t < 1:
        raise ValueError(f"时间步必须 >= 1: {t}")
    if t > config.t_max:
        raise HorizonExceededError(f"时间步 {t} 超出可记录的轨迹长度 {config.t_max}")

    transfer = GipTransfer(schedule, graph.n)
    x = np.asarray(x0, dtype=float)
    masks = []
    for r in range(1, t + 1):
        y = aggregate(graph, x)
        bounds = transfer.bounds(r)
        masks.append(bounds.linear_region(y))
        x = bounds.clip(y)

    grad = np.full(graph.n, (1.0 - config.gamma) ** t)
    for mask in reversed(masks):
        grad = np.asarray(graph.out_csr @ (mask * grad))
    return grad
