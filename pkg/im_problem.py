"""
影响力最大化问题定义
预算约束下的问题实例, 带缓存的目标函数, 求解结果与穷举排名表
"""

import math
import logging
import threading
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from bound_schedules import BoundSchedule
from exceptions import KTooLargeError, NonConvergentError
from network_graph import Graph
from propagation_engine import GipTransfer, PropagationConfig, PropagationEngine

logger = logging.getLogger(__name__)

SeedSet = Tuple[int, ...]
INFEASIBLE = float('-inf')


@dataclass
class ImProblem:
    """
    影响力最大化问题

    在 sum_j z_j = k 的约束下最大化 s(h0 ⊙ z).
    """
    graph: Graph
    schedule: BoundSchedule
    k: int
    gamma: float = 0.0
    eps: float = 1e-10
    l0: Union[float, np.ndarray] = 1.0
    h0: Union[float, np.ndarray] = 1.0
    t_max: int = 10000
    allow_partial: bool = False
    brute_force_cap: int = 10 ** 7

    def __post_init__(self):
        n = self.graph.n
        if not 1 <= self.k <= n:
            raise KTooLargeError(f"预算 k 必须在 [1, {n}] 之间: {self.k}")

        self.l0 = np.broadcast_to(np.asarray(self.l0, dtype=float), (n,)).copy()
        self.h0 = np.broadcast_to(np.asarray(self.h0, dtype=float), (n,)).copy()
        if np.any(self.l0 <= 0) or np.any(self.h0 < self.l0):
            raise ValueError("需要 0 < l_{j,0} <= h_{j,0}")

        initial = self.schedule.initial_bounds(n)
        if initial is not None and not (np.allclose(initial[0], self.l0) and np.allclose(initial[1], self.h0)):
            raise ValueError("边界函数在 t=0 的边界与问题的 l0/h0 不一致")

        self.config = PropagationConfig(gamma=self.gamma, eps=self.eps, t_max=self.t_max)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def n_subsets(self) -> int:
        return math.comb(self.n, self.k)

    def seed_vector(self, seed_set: Iterable[int]) -> np.ndarray:
        """种子集合对应的0/1向量 z"""
        z = np.zeros(self.n, dtype=np.int64)
        z[list(seed_set)] = 1
        return z

    def initial_state(self, seed_set: Iterable[int]) -> np.ndarray:
        """x(0) = h0 ⊙ z"""
        return self.h0 * self.seed_vector(seed_set)


@dataclass
class SolverOutcome:
    """求解器输出"""
    method: str
    z: np.ndarray
    seed_set: List[int]
    objective: float
    n_evals: int
    iterations: int
    elapsed_seconds: float
    details: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            'method': self.method,
            'seed_set': self.seed_set,
            'objective': self.objective,
            'n_evals': self.n_evals,
            'iterations': self.iterations,
            'elapsed': self.elapsed_seconds,
            **self.details
        }


@dataclass
class RankingTable:
    """
    全部大小为k的种子集合的排名

    seed_sets 每行为升序节点编号, 按目标值降序排列, 目标值相同时保持字典序.
    """
    seed_sets: np.ndarray
    objectives: np.ndarray
    _index: Optional[Dict[SeedSet, int]] = field(default=None, repr=False)

    def __len__(self):
        return len(self.objectives)

    @property
    def best(self) -> float:
        return float(self.objectives[0])

    @property
    def best_set(self) -> List[int]:
        return self.seed_sets[0].tolist()

    @property
    def entries(self) -> List[Tuple[SeedSet, float]]:
        return [(tuple(row), float(v)) for row, v in zip(self.seed_sets.tolist(), self.objectives)]

    def objective_of(self, seed_set: Iterable[int]) -> float:
        if self._index is None:
            self._index = {tuple(row): i for i, row in enumerate(self.seed_sets.tolist())}
        key = tuple(sorted(int(i) for i in seed_set))
        if key not in self._index:
            raise KeyError(f"排名表中没有种子集合 {list(key)}")
        return float(self.objectives[self._index[key]])


class InfluenceObjective:
    """
    目标函数 s(h0 ⊙ z)

    以种子集合为键缓存结果, 多线程共享同一个缓存; n_evals 只统计不重复的评估.
    不可行点 (集合大小不等于k) 返回 -inf.
    """

    def __init__(self, problem: ImProblem, batch_size: int = 4096):
        """
        初始化目标函数

        Args:
            problem: 影响力最大化问题
            batch_size: 每次批量传播的最大列数
        """
        self.problem = problem
        self.batch_size = batch_size
        self.engine = PropagationEngine(
            problem.graph, GipTransfer(problem.schedule, problem.n), problem.config
        )
        self._memo: Dict[SeedSet, float] = {}
        self._lock = threading.Lock()
        self.n_evals = 0
        self.non_converged = 0

    def is_feasible(self, key: SeedSet) -> bool:
        return (
            len(key) == self.problem.k
            and len(set(key)) == len(key)
            and all(0 <= i < self.problem.n for i in key)
        )

    def is_evaluated(self, seed_set: Iterable[int]) -> bool:
        with self._lock:
            return tuple(sorted(seed_set)) in self._memo

    def __call__(self, seed_set: Iterable[int]) -> float:
        return float(self.evaluate_many([seed_set])[0])

    def evaluate_vector(self, z: np.ndarray) -> float:
        """以0/1向量表示的目标函数, 极限障碍法处理不可行点"""
        z = np.asarray(z)
        if not np.all((z == 0) | (z == 1)) or int(z.sum()) != self.problem.k:
            return INFEASIBLE
        return self(np.flatnonzero(z).tolist())

    def evaluate_many(self, seed_sets: Sequence[Iterable[int]]) -> np.ndarray:
        """批量评估 (带缓存), 返回与输入顺序一致的目标值"""
        keys = [tuple(sorted(int(i) for i in s)) for s in seed_sets]

        with self._lock:
            pending = list(dict.fromkeys(
                key for key in keys if key not in self._memo and self.is_feasible(key)
            ))

        if pending:
            values = self.evaluate_sets(np.array(pending, dtype=np.int64).reshape(len(pending), -1))
            with self._lock:
                for key, value in zip(pending, values):
                    if key not in self._memo:
                        self._memo[key] = float(value)
                        self.n_evals += 1

        with self._lock:
            return np.array([self._memo.get(key, INFEASIBLE) for key in keys])

    def evaluate_sets(self, sets: np.ndarray, count: bool = False) -> np.ndarray:
        """
        不经过缓存直接评估 (B, k) 数组中的每个种子集合

        Args:
            sets: 每行一个种子集合
            count: 是否计入 n_evals (穷举时使用)
        """
        results = np.empty(len(sets))
        h0 = self.problem.h0
        for start in range(0, len(sets), self.batch_size):
            chunk = sets[start:start + self.batch_size]
            x0 = np.zeros((self.problem.n, len(chunk)))
            x0[chunk, np.arange(len(chunk))[:, None]] = h0[chunk]

            batch = self.engine.run_batch(x0)
            if not batch.all_converged:
                n_bad = int(np.sum(~batch.converged))
                with self._lock:
                    self.non_converged += n_bad
                if not self.problem.allow_partial:
                    raise NonConvergentError(f"{n_bad} 个种子集合的传播在 t_max 内未收敛")
                logger.warning(f"{n_bad} 个种子集合未收敛, 使用部分和")
            results[start:start + len(chunk)] = batch.totals

        if count:
            with self._lock:
                self.n_evals += len(sets)
        return results


def objective(problem: ImProblem, z: np.ndarray) -> float:
    """单次评估 s(h0 ⊙ z), 不可行的 z 返回 -inf"""
    return InfluenceObjective(problem).evaluate_vector(z)
