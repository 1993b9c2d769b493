"""
影响力最大化求解器
线性情形精确解, 定制直接搜索(CDS), 穷举, 以及随机/中心性基准方法
"""

import itertools
import logging
import time
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from centrality import CentralityVector, NetworkCentrality
from exceptions import CombinatorialBlowupError, ConfigError, DivergentSeriesError
from im_problem import ImProblem, InfluenceObjective, RankingTable, SeedSet, SolverOutcome
from propagation_analysis import validate_eic_limit

logger = logging.getLogger(__name__)


def _ranked_top(scores: np.ndarray, candidates: np.ndarray, k: int) -> List[int]:
    """candidates 中得分最高的k个节点, 得分相同按编号升序"""
    order = np.lexsort((candidates, -scores[candidates]))
    return sorted(candidates[order[:k]].tolist())


def swap_neighborhood(seed_set: Sequence[int], n: int, d: int, scores: np.ndarray) -> Iterator[SeedSet]:
    """
    距离不超过d的可行邻居 (交换 r = 1..d/2 个节点)

    同一交换规模内, 按换入节点得分之和降序, 再按换入节点编号, 最后按换出节点编号排序.

    Args:
        seed_set: 当前种子集合
        n: 节点总数
        d: 邻域半径 (偶数)
        scores: 排序用得分 h_{j,0} c_j

    Yields:
        升序排列的新种子集合
    """
    inside = sorted(int(i) for i in seed_set)
    inside_set = set(inside)
    outside = [j for j in range(n) if j not in inside_set]

    for r in range(1, min(d // 2, len(inside), len(outside)) + 1):
        incoming = sorted(
            itertools.combinations(outside, r),
            key=lambda combo: (-float(np.sum(scores[list(combo)])), combo)
        )
        outgoing = list(itertools.combinations(inside, r))
        for into in incoming:
            for out in outgoing:
                kept = inside_set.difference(out)
                yield tuple(sorted(kept.union(into)))


def _chunked(stream: Iterator, size: int) -> Iterator[List]:
    while True:
        chunk = list(itertools.islice(stream, size))
        if not chunk:
            return
        yield chunk


class BaseSolver(ABC):
    """求解器基类"""

    def __init__(self, name: str, parameters: Dict = None):
        """
        初始化求解器

        Args:
            name: 方法名称
            parameters: 方法参数
        """
        self.name = name
        self.parameters = parameters or {}

    @abstractmethod
    def solve(self, problem: ImProblem, objective: Optional[InfluenceObjective] = None) -> SolverOutcome:
        """
        求解影响力最大化问题

        Args:
            problem: 问题实例
            objective: 共享的目标函数 (可选, 用于复用缓存)

        Returns:
            SolverOutcome
        """
        pass

    def _outcome(
        self,
        problem: ImProblem,
        objective: InfluenceObjective,
        seed_set: Sequence[int],
        value: float,
        iterations: int,
        start: float,
        **details
    ) -> SolverOutcome:
        seed_set = sorted(int(i) for i in seed_set)
        return SolverOutcome(
            method=self.name,
            z=problem.seed_vector(seed_set),
            seed_set=seed_set,
            objective=float(value),
            n_evals=objective.n_evals,
            iterations=iterations,
            elapsed_seconds=time.perf_counter() - start,
            details=details
        )


def katz_scores(problem: ImProblem, fallback: bool = False) -> np.ndarray:
    """
    h_{j,0} c_j, c 为因子 1-γ 的Katz中心性

    fallback=True 时Katz级数发散则改用度中心性.
    """
    try:
        c = NetworkCentrality.katz_centrality(problem.graph, 1.0 - problem.gamma)
    except DivergentSeriesError as e:
        if not fallback:
            raise
        logger.warning(f"Katz中心性发散, 改用度中心性作为初始排序: {e}")
        c = NetworkCentrality.degree_centrality(problem.graph)
    return problem.h0 * c.values


class ExactLinearSolver(BaseSolver):
    """EIC极限下的精确解: 选 h_{j,0} c_j 最大的k个节点, x_j = h_{j,0}"""

    def __init__(self, check_horizon: int = 0):
        """
        Args:
            check_horizon: 大于0时, 对非EIC边界函数检查该时间范围内的等价条件并记录违反数
        """
        super().__init__(name="exact_linear", parameters={'check_horizon': check_horizon})
        self.check_horizon = check_horizon

    def solve(self, problem: ImProblem, objective: Optional[InfluenceObjective] = None) -> SolverOutcome:
        start = time.perf_counter()
        objective = objective or InfluenceObjective(problem)

        c = NetworkCentrality.katz_centrality(problem.graph, 1.0 - problem.gamma)
        seed_set = NetworkCentrality.top_k(c, problem.h0, problem.k)
        closed_form = float(np.sum(c.values[seed_set] * problem.h0[seed_set]))

        details = {'closed_form': closed_form}
        if self.check_horizon > 0 and not problem.schedule.is_eic_limit:
            violations = validate_eic_limit(
                problem.graph, problem.schedule, problem.initial_state(seed_set), self.check_horizon
            )
            details['eic_violations'] = len(violations)
            if violations:
                logger.info(f"边界函数在前 {self.check_horizon} 步不满足EIC等价条件, 线性解仅作参考")

        return self._outcome(problem, objective, seed_set, objective(seed_set), 1, start, **details)


@dataclass
class CdsParams:
    """
    CDS参数

    zeta: 充分改进因子 ζ
    delta: ζ 的衰减系数 δ
    d: 邻域半径 (偶数)
    restart: 'none' 或 'community' (按社区划分重启)
    partition: 社区划分, 为空时使用图自带的社区标记
    poll_batch: 每次批量评估的邻居个数
    """
    zeta: float = 0.1
    delta: float = 0.5
    d: int = 2
    search_enabled: bool = False
    restart: str = 'none'
    partition: Optional[np.ndarray] = None
    poll_batch: int = 32
    max_iterations: int = 100000

    def __post_init__(self):
        if not self.zeta > 0:
            raise ValueError(f"zeta 必须为正: {self.zeta}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta 必须在 (0, 1) 之间: {self.delta}")
        if self.d < 2 or self.d % 2 != 0:
            raise ValueError(f"邻域半径 d 必须是 >= 2 的偶数: {self.d}")
        if self.restart not in ('none', 'community'):
            raise ValueError(f"未知重启策略: {self.restart}")
        if self.restart == 'community':
            self.search_enabled = True
        if self.poll_batch < 1:
            raise ValueError(f"poll_batch 必须 >= 1: {self.poll_batch}")


class CdsSolver(BaseSolver):
    """定制直接搜索 (CDS)"""

    def __init__(self, params: CdsParams = None):
        params = params or CdsParams()
        super().__init__(
            name="cds",
            parameters={'zeta': params.zeta, 'delta': params.delta, 'd': params.d, 'restart': params.restart}
        )
        self.params = params

    def solve(self, problem: ImProblem, objective: Optional[InfluenceObjective] = None) -> SolverOutcome:
        start = time.perf_counter()
        objective = objective or InfluenceObjective(problem)
        scores = katz_scores(problem, fallback=True)

        warm_start = _ranked_top(scores, np.arange(problem.n), problem.k)
        warm_value = objective(warm_start)
        best_set, best_value, iterations = self._local_search(problem, objective, warm_start, scores)
        restarts = 0

        if self.params.search_enabled and self.params.restart == 'community':
            for point in self._community_starts(problem, scores):
                if objective.is_evaluated(point):
                    continue
                restarts += 1
                candidate, value, steps = self._local_search(problem, objective, point, scores)
                iterations += steps
                if value > best_value:
                    best_set, best_value = candidate, value

        logger.info(
            f"CDS完成: k={problem.k}, 目标值 {best_value:.6g} (初始 {warm_value:.6g}), "
            f"评估 {objective.n_evals} 次, 迭代 {iterations} 次"
        )
        return self._outcome(
            problem, objective, best_set, best_value, iterations, start,
            warm_start=warm_start, warm_objective=warm_value, restarts=restarts
        )

    def _local_search(
        self,
        problem: ImProblem,
        objective: InfluenceObjective,
        seed_set: Sequence[int],
        scores: np.ndarray
    ) -> Tuple[List[int], float, int]:
        """从给定点出发的轮询搜索, 返回关于邻域的局部最大点"""
        params = self.params
        current = tuple(sorted(seed_set))
        value = objective(current)
        zeta = params.zeta
        iterations = 0

        while iterations < params.max_iterations:
            iterations += 1
            threshold = (1.0 + zeta) * value
            best_candidate, best_value = None, value
            sufficient = None

            neighbors = swap_neighborhood(current, problem.n, params.d, scores)
            for chunk in _chunked(neighbors, params.poll_batch):
                values = objective.evaluate_many(chunk)
                for candidate, candidate_value in zip(chunk, values):
                    if candidate_value > threshold:
                        sufficient = (candidate, float(candidate_value))
                        break
                    if candidate_value > best_value:
                        best_candidate, best_value = candidate, float(candidate_value)
                if sufficient is not None:
                    break

            if sufficient is not None:
                current, value = sufficient
            elif best_candidate is not None:
                current, value = best_candidate, best_value
                zeta *= params.delta
            else:
                break

            logger.debug(f"CDS第 {iterations} 次轮询: 目标值 {value:.6g}, zeta={zeta:.4g}")

        return list(current), value, iterations

    def _community_starts(self, problem: ImProblem, scores: np.ndarray) -> Iterator[List[int]]:
        """
        社区重启点: k 在各社区间的每一种分配 (k_1, k_2, ...),
        每个社区内取得分最高的 k_b 个节点
        """
        partition = self.params.partition
        if partition is None:
            partition = problem.graph.communities
        if partition is None:
            raise ConfigError("社区重启需要社区划分, 但图中没有社区标记")

        partition = np.asarray(partition)
        blocks = [np.flatnonzero(partition == label) for label in np.unique(partition)]

        def splits(remaining: int, index: int):
            if index == len(blocks) - 1:
                if remaining <= len(blocks[index]):
                    yield (remaining,)
                return
            for take in range(min(remaining, len(blocks[index])), -1, -1):
                for rest in splits(remaining - take, index + 1):
                    yield (take,) + rest

        for split in splits(problem.k, 0):
            point = []
            for block, take in zip(blocks, split):
                if take > 0:
                    point.extend(_ranked_top(scores, block, take))
            yield sorted(point)


class BruteForceSolver(BaseSolver):
    """穷举全部 C(n,k) 个种子集合"""

    def __init__(self, cap: Optional[int] = None, threads: int = 1, chunk_size: int = 8192):
        """
        Args:
            cap: 组合数上限, 为空时使用问题的 brute_force_cap
            threads: 并行评估的线程数
            chunk_size: 每个任务的集合数
        """
        super().__init__(name="brute", parameters={'cap': cap, 'threads': threads})
        self.cap = cap
        self.threads = threads
        self.chunk_size = chunk_size

    def rank(self, problem: ImProblem, objective: Optional[InfluenceObjective] = None) -> RankingTable:
        """按目标值降序排列全部种子集合, 目标值相同时保持字典序"""
        cap = self.cap if self.cap is not None else problem.brute_force_cap
        total = problem.n_subsets
        if total > cap:
            raise CombinatorialBlowupError(f"C({problem.n},{problem.k}) = {total} 超过上限 {cap}")

        objective = objective or InfluenceObjective(problem)
        combos = itertools.combinations(range(problem.n), problem.k)
        chunks = [
            np.array(chunk, dtype=np.int64).reshape(len(chunk), problem.k)
            for chunk in _chunked(combos, self.chunk_size)
        ]

        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                values = list(pool.map(lambda c: objective.evaluate_sets(c, count=True), chunks))
        else:
            values = [objective.evaluate_sets(c, count=True) for c in chunks]

        seed_sets = np.concatenate(chunks)
        objectives = np.concatenate(values)
        order = np.argsort(-objectives, kind='stable')
        logger.debug(f"穷举完成: {total} 个集合, 最优值 {objectives[order[0]]:.6g}")
        return RankingTable(seed_sets=seed_sets[order], objectives=objectives[order])

    def solve(self, problem: ImProblem, objective: Optional[InfluenceObjective] = None) -> SolverOutcome:
        start = time.perf_counter()
        objective = objective or InfluenceObjective(problem)
        ranking = self.rank(problem, objective)
        return self._outcome(problem, objective, ranking.best_set, ranking.best, 1, start)


class RandomSamplingSolver(BaseSolver):
    """随机选取n_s个大小为k的集合, 取最好的一个"""

    def __init__(self, n_s: int = 100, seed: int = 0):
        if n_s < 1:
            raise ValueError(f"采样次数必须 >= 1: {n_s}")
        super().__init__(name="random", parameters={'n_s': n_s, 'seed': seed})
        self.n_s = n_s
        self.seed = seed

    def solve(self, problem: ImProblem, objective: Optional[InfluenceObjective] = None) -> SolverOutcome:
        start = time.perf_counter()
        objective = objective or InfluenceObjective(problem)
        rng = np.random.default_rng(self.seed)
        draws = [sorted(rng.choice(problem.n, problem.k, replace=False).tolist()) for _ in range(self.n_s)]

        values = objective.evaluate_many(draws)
        best = int(np.argmax(values))
        return self._outcome(problem, objective, draws[best], values[best], self.n_s, start)


class CentralitySolver(BaseSolver):
    """选取度中心性或Katz中心性最高的k个节点"""

    def __init__(self, kind: str = 'degree'):
        if kind not in ('degree', 'katz'):
            raise ValueError(f"未知中心性类型: {kind}")
        super().__init__(name=kind, parameters={'kind': kind})
        self.kind = kind

    def solve(self, problem: ImProblem, objective: Optional[InfluenceObjective] = None) -> SolverOutcome:
        start = time.perf_counter()
        objective = objective or InfluenceObjective(problem)

        if self.kind == 'katz':
            c: CentralityVector = NetworkCentrality.katz_centrality(problem.graph, 1.0 - problem.gamma)
        else:
            c = NetworkCentrality.degree_centrality(problem.graph)
        seed_set = NetworkCentrality.top_k(c, 1.0, problem.k)
        return self._outcome(problem, objective, seed_set, objective(seed_set), 1, start)


def create_solver(method: str, params: Dict = None) -> BaseSolver:
    """根据方法名称创建求解器"""
    params = params or {}

    solver_map = {
        'cds': lambda: CdsSolver(CdsParams(
            zeta=params.get('zeta', 0.1),
            delta=params.get('delta', 0.5),
            d=params.get('radius', 2),
            restart=params.get('restart', 'none'),
            poll_batch=params.get('poll_batch', 32)
        )),
        'brute': lambda: BruteForceSolver(cap=params.get('brute_force_cap'), threads=params.get('threads', 1)),
        'random': lambda: RandomSamplingSolver(n_s=params.get('n_s', 100), seed=params.get('seed', 0)),
        'degree': lambda: CentralitySolver('degree'),
        'katz': lambda: CentralitySolver('katz'),
        'exact_linear': lambda: ExactLinearSolver(check_horizon=params.get('check_horizon', 0)),
    }

    if method not in solver_map:
        raise ConfigError(f"未知求解方法: {method}")

    return solver_map[method]()
