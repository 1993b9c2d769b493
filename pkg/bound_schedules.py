"""
边界函数模块
定义GIP模型每个节点每个时间步的下界 l_{j,t} 和上界 h_{j,t}
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Mapping, Optional, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

Param = Union[float, np.ndarray]


class ScheduleKind(Enum):
    """边界函数类型"""
    THRESHOLD_TYPE = "threshold"
    EIC_LIMIT = "eic"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class StepBounds:
    """
    某一时间步全部节点的边界

    upper 为 None 表示所有节点均无上界 (不用浮点数 inf 参与运算).
    """
    lower: np.ndarray
    upper: Optional[np.ndarray]

    def clip(self, y: np.ndarray) -> np.ndarray:
        """
        对线性聚合值 y 应用边界函数

        y < l 得 0, l <= y < h 得 y, y >= h 得 h. y 可以是 (n,) 或 (n, B).
        """
        lower = self.lower if y.ndim == 1 else self.lower[:, None]
        x = np.where(y >= lower, y, 0.0)
        if self.upper is not None:
            upper = self.upper if y.ndim == 1 else self.upper[:, None]
            x = np.where(y >= upper, np.broadcast_to(upper, y.shape), x)
        return x

    def linear_region(self, y: np.ndarray) -> np.ndarray:
        """右导数: l <= y < h 时为 1, 否则为 0"""
        inside = y >= self.lower
        if self.upper is not None:
            inside &= y < self.upper
        return inside.astype(float)


def _as_node_array(value: Param, n: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"逐节点参数长度 {arr.shape[0]} 与节点数 {n} 不一致")
    return arr


def _node_value(value: Param, j: int) -> float:
    arr = np.asarray(value, dtype=float)
    return float(arr) if arr.ndim == 0 else float(arr[j])


class BoundSchedule(ABC):
    """边界函数基类"""

    kind: ScheduleKind

    def __init__(self, name: str, parameters: Dict = None):
        """
        初始化边界函数

        Args:
            name: 名称
            parameters: 参数 (用于报告输出)
        """
        self.name = name
        self.parameters = parameters or {}

    @abstractmethod
    def raw_bounds(self, t: int) -> Tuple[Param, Optional[Param]]:
        """
        第t步的 (下界, 上界), 可以是标量或逐节点数组, 上界为 None 表示无上界
        """
        pass

    def bounds_at(self, t: int, n: int) -> StepBounds:
        """第t步全部n个节点的边界"""
        lower, upper = self.raw_bounds(t)
        lower = _as_node_array(lower, n)
        upper = None if upper is None else _as_node_array(upper, n)
        return StepBounds(lower=lower, upper=upper)

    def node_bounds(self, j: int, t: int) -> Tuple[float, Optional[float]]:
        """节点j在第t步的 (l_{j,t}, h_{j,t}), h 为 None 表示无上界"""
        lower, upper = self.raw_bounds(t)
        return _node_value(lower, j), (None if upper is None else _node_value(upper, j))

    def initial_bounds(self, n: int) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """初始状态的 (l_{j,0}, h_{j,0}), 没有定义时返回 None"""
        return None

    @property
    def is_eic_limit(self) -> bool:
        return False

    def describe(self) -> Dict:
        return {'schedule': self.kind.value, **self.parameters}


class ThresholdTypeBounds(BoundSchedule):
    """
    阈值型边界

    t >= 1 时 l_{j,t} = (θ_l α)^t l_{j,0}, h_{j,t} = θ_h θ_l^{t-1} α^t h_{j,0};
    t = 0 时返回 (l_{j,0}, h_{j,0}).
    """

    kind = ScheduleKind.THRESHOLD_TYPE

    def __init__(self, theta_l: Param, theta_h: Param, alpha: float, l0: Param = 1.0, h0: Param = 1.0):
        """
        初始化阈值型边界

        Args:
            theta_l: 下界阈值 θ_l (标量或逐节点数组, >= 0)
            theta_h: 上界阈值 θ_h
            alpha: 网络平均权重 α
            l0: 初始下界 l_{j,0} > 0
            h0: 初始上界 h_{j,0} >= l_{j,0}
        """
        super().__init__(
            name="Threshold-type bounds",
            parameters={'theta_l': theta_l, 'theta_h': theta_h, 'alpha': alpha, 'l0': l0, 'h0': h0}
        )
        if not alpha > 0:
            raise ValueError(f"平均权重 alpha 必须为正: {alpha}")
        if np.any(np.asarray(theta_l) < 0):
            raise ValueError("下界阈值 theta_l 不能为负")
        if np.any(np.asarray(l0) <= 0):
            raise ValueError("初始下界 l0 必须为正")
        if np.any(np.asarray(h0) < np.asarray(l0)):
            raise ValueError("初始上界 h0 不能小于 l0")
        if np.any(np.asarray(theta_h) * np.asarray(h0) < np.asarray(theta_l) * np.asarray(l0)):
            raise ValueError("需要 θ_h h0 >= θ_l l0, 否则上界会低于下界")

        self.theta_l = theta_l
        self.theta_h = theta_h
        self.alpha = alpha
        self.l0 = l0
        self.h0 = h0

    def raw_bounds(self, t: int):
        if t == 0:
            return self.l0, self.h0
        lower = (self.theta_l * self.alpha) ** t * self.l0
        upper = self.theta_h * self.theta_l ** (t - 1) * self.alpha ** t * self.h0
        return lower, upper

    def initial_bounds(self, n: int):
        return _as_node_array(self.l0, n), _as_node_array(self.h0, n)


class EicLimitBounds(BoundSchedule):
    """EIC极限: 对所有 t >= 1, l = 0 且无上界, 动力学为纯线性"""

    kind = ScheduleKind.EIC_LIMIT

    def __init__(self):
        super().__init__(name="EIC limit")

    def raw_bounds(self, t: int):
        return 0.0, None

    @property
    def is_eic_limit(self) -> bool:
        return True


class ExplicitBounds(BoundSchedule):
    """
    显式边界: 由规则函数 t -> (l_t, h_t) 或表 {t: (l_t, h_t)} 给出

    每次取值都检查 0 <= l <= h.
    """

    kind = ScheduleKind.EXPLICIT

    def __init__(
        self,
        rule: Union[Callable[[int], Tuple[Param, Optional[Param]]], Mapping[int, Tuple[Param, Optional[Param]]]],
        l0: Optional[Param] = None,
        h0: Optional[Param] = None
    ):
        super().__init__(name="Explicit bounds")
        self.rule = rule
        self.l0 = l0
        self.h0 = h0

    def raw_bounds(self, t: int):
        if t == 0 and self.l0 is not None:
            return self.l0, self.h0
        if callable(self.rule):
            lower, upper = self.rule(t)
        elif t in self.rule:
            lower, upper = self.rule[t]
        else:
            raise ValueError(f"边界表中没有第 {t} 步")

        if np.any(np.asarray(lower) < 0):
            raise ValueError(f"第 {t} 步下界为负")
        if upper is not None and np.any(np.asarray(upper) < np.asarray(lower)):
            raise ValueError(f"第 {t} 步上界低于下界")
        return lower, upper

    def initial_bounds(self, n: int):
        if self.l0 is None:
            return None
        return _as_node_array(self.l0, n), _as_node_array(self.h0 if self.h0 is not None else self.l0, n)


def bound_eval(schedule: BoundSchedule, j: int, t: int, y: float) -> float:
    """
    单个节点的边界函数 f_{j,t}(y)

    Returns:
        0 (y < l), y (l <= y < h), h (y >= h)
    """
    lower, upper = schedule.node_bounds(j, t)
    if y < lower:
        return 0.0
    if upper is not None and y >= upper:
        return upper
    return y


def make_schedule(
    theta_l: Optional[float],
    theta_h: Optional[float],
    alpha: float,
    l0: Param = 1.0,
    h0: Param = 1.0
) -> BoundSchedule:
    """θ_l 为 None 时返回EIC极限, 否则返回阈值型边界"""
    if theta_l is None:
        return EicLimitBounds()
    return ThresholdTypeBounds(theta_l, theta_h if theta_h is not None else theta_l, alpha, l0, h0)
