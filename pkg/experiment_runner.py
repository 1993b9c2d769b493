"""
实验运行模块
按配置生成网络样本, 并行运行各类实验, 输出统一格式的结果行
"""

import time
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from bound_schedules import BoundSchedule, make_schedule
from exceptions import ConfigError
from experiment_reports import RESULT_COLUMNS, validate_rows
from graph_generators import count_bridges, sample_seed
from graph_loader import build_network, is_random_network
from im_problem import ImProblem, InfluenceObjective
from im_solvers import BruteForceSolver, CdsParams, CdsSolver, CentralitySolver, RandomSamplingSolver
from network_graph import Graph, is_weakly_connected, mean_weight
from propagation_engine import PropagationConfig, PropagationResult, evaluate_influence
from solution_metrics import accuracy, rank_metric, summarize

logger = logging.getLogger(__name__)

EXPERIMENT_KINDS = (
    'propagate',
    'sbm-effects',
    'coexistence',
    'im-accuracy-grid',
    'im-budget-sweep',
    'method-compare',
    'budget-saturation',
    'runtime-sweep',
)

DEFAULT_THETA_L = [round(1.0 + 0.2 * i, 1) for i in range(11)]
DEFAULT_THETA_H = [1.0, 2.0, 4.0, 8.0, 16.0]

Cell = Tuple[Optional[float], Optional[float]]


def _as_list(value) -> list:
    if value is None:
        return []
    return list(value) if isinstance(value, (list, tuple)) else [value]


def theta_cells(model: Dict) -> List[Cell]:
    """
    由模型配置得到 (θ_l, θ_h) 网格

    theta_h 取 'same' 时只有 θ_h = θ_l 的格子; 否则每个 θ_l 与 theta_h ∪ {θ_l}
    组合并去掉 θ_h < θ_l 的格子. eic_limit 为真时在最前面加入EIC极限 (None, None).
    """
    cells: List[Cell] = [(None, None)] if model.get('eic_limit', False) else []
    theta_l = _as_list(model.get('theta_l', DEFAULT_THETA_L))
    theta_h = model.get('theta_h', DEFAULT_THETA_H)

    for tl in theta_l:
        tl = float(tl)
        if theta_h == 'same':
            cells.append((tl, tl))
            continue
        for th in sorted(set(float(h) for h in _as_list(theta_h)) | {tl}):
            if th >= tl:
                cells.append((tl, th))

    if not cells:
        raise ConfigError("θ 网格为空")
    return cells


def seed_label(seeds: Sequence[int]) -> str:
    return "-".join(str(int(i)) for i in seeds)


@dataclass
class ExperimentConfig:
    """实验配置"""
    kind: str
    network: Dict = field(default_factory=lambda: {'type': 'sbm'})
    model: Dict = field(default_factory=dict)
    seeds: Dict = field(default_factory=dict)
    solver: Dict = field(default_factory=dict)
    samples: int = 100
    paper_scale_samples: int = 1000
    paper_scale: bool = False
    base_seed: int = 0
    threads: int = 1
    allow_partial: bool = False
    output: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"未知实验类型: {self.kind}")
        if self.samples < 1 or self.paper_scale_samples < 1:
            raise ConfigError(f"样本数必须 >= 1: {self.samples}")
        if self.threads < 1:
            raise ConfigError(f"线程数必须 >= 1: {self.threads}")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma 必须在 [0, 1) 之间: {self.gamma}")
        self.cells = theta_cells(self.model)

    @classmethod
    def from_dict(cls, raw: Dict) -> "ExperimentConfig":
        """
        由配置字典 (config.yaml 或 configs/*.json 的内容) 构造

        Args:
            raw: 包含 experiment/network/model/seeds/solver/output 各节的字典
        """
        experiment = raw.get('experiment', {})
        if 'kind' not in experiment:
            raise ConfigError("配置缺少 experiment.kind")
        return cls(
            kind=experiment['kind'],
            network=dict(raw.get('network', {'type': 'sbm'})),
            model=dict(raw.get('model', {})),
            seeds=dict(raw.get('seeds', {})),
            solver=dict(raw.get('solver', {})),
            samples=int(experiment.get('samples', 100)),
            paper_scale_samples=int(experiment.get('paper_scale_samples', 1000)),
            paper_scale=bool(experiment.get('paper_scale', False)),
            base_seed=int(experiment.get('seed', 0)),
            threads=int(experiment.get('threads', 1)),
            allow_partial=bool(experiment.get('allow_partial', False)),
            output=dict(raw.get('output', {}))
        )

    @property
    def n_samples(self) -> int:
        return self.paper_scale_samples if self.paper_scale else self.samples

    @property
    def gamma(self) -> float:
        return float(self.model.get('gamma', 0.0))

    @property
    def propagation(self) -> PropagationConfig:
        return PropagationConfig(
            gamma=self.gamma,
            eps=float(self.model.get('eps', 1e-10)),
            t_max=int(self.model.get('t_max', 10000))
        )

    @property
    def horizon(self) -> int:
        return int(self.model.get('horizon', 10))

    @property
    def l0(self) -> float:
        return float(self.model.get('l0', 1.0))

    @property
    def h0(self) -> float:
        return float(self.model.get('h0', self.model.get('l0', 1.0)))


@dataclass
class ExperimentResult:
    """一次实验的结果表及运行统计"""
    kind: str
    table: pd.DataFrame
    n_replicates: int
    non_converged: int
    connected_fraction: Optional[float]
    elapsed_seconds: float
    config: ExperimentConfig = field(repr=False, default=None)


class ExperimentRunner:
    """实验运行器"""

    def __init__(self, config: ExperimentConfig):
        """
        初始化实验运行器

        Args:
            config: 实验配置
        """
        self.config = config
        self._lock = threading.Lock()
        self.non_converged = 0
        self.connected: List[bool] = []

    def run(self) -> ExperimentResult:
        """运行配置指定的实验"""
        cfg = self.config
        experiment_map = {
            'propagate': self.run_propagate,
            'sbm-effects': self.run_sbm_effects,
            'coexistence': self.run_coexistence,
            'im-accuracy-grid': self.run_im_accuracy_grid,
            'im-budget-sweep': self.run_im_budget_sweep,
            'method-compare': self.run_method_compare,
            'budget-saturation': self.run_budget_saturation,
            'runtime-sweep': self.run_runtime_sweep,
        }

        logger.info("=" * 80)
        logger.info(f"开始实验: {cfg.kind}")
        logger.info("=" * 80)
        start = time.perf_counter()

        rows, n_replicates = experiment_map[cfg.kind]()
        table = self._normalize(rows)

        elapsed = time.perf_counter() - start
        fraction = float(np.mean(self.connected)) if self.connected and is_random_network(cfg.network) else None
        logger.info(f"实验完成: {len(table)} 行结果, {n_replicates} 个样本, 耗时 {elapsed:.2f} 秒")
        if self.non_converged:
            logger.warning(f"共有 {self.non_converged} 次传播在 t_max 内未收敛")

        return ExperimentResult(
            kind=cfg.kind,
            table=table,
            n_replicates=n_replicates,
            non_converged=self.non_converged,
            connected_fraction=fraction,
            elapsed_seconds=elapsed,
            config=cfg
        )

    def _normalize(self, rows: List[Dict]) -> pd.DataFrame:
        columns = RESULT_COLUMNS[self.config.kind]
        table = validate_rows(self.config.kind, pd.DataFrame(rows, columns=columns))
        keys = [c for c in columns if c not in ('kind', 'metric', 'value')]
        return table.sort_values(keys, kind='mergesort', na_position='last').reset_index(drop=True)

    # ------------------------------------------------------------------
    # 样本与问题构造
    # ------------------------------------------------------------------

    def _replicates(self, task: Callable[[int, Graph], List[Dict]], network: Dict = None) -> Tuple[List[Dict], int]:
        """
        对每个网络样本运行task并合并结果

        随机网络使用 n_samples 个样本, 第i个样本的种子为 sample_seed(base, i);
        确定性网络只有一个样本.
        """
        cfg = self.config
        network = network if network is not None else cfg.network
        count = cfg.n_samples if is_random_network(network) else 1

        def one(index: int) -> List[Dict]:
            graph = build_network(network, sample_seed(cfg.base_seed, index))
            connected = is_weakly_connected(graph)
            with self._lock:
                self.connected.append(connected)
            return task(index, graph)

        workers = min(cfg.threads, count)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                chunks = list(pool.map(one, range(count)))
        else:
            chunks = [one(i) for i in range(count)]

        return [row for chunk in chunks for row in chunk], count

    def _schedule(self, graph: Graph, cell: Cell) -> BoundSchedule:
        theta_l, theta_h = cell
        if theta_l is None:
            return make_schedule(None, None, 1.0)
        alpha = mean_weight(graph) if graph.m > 0 else float(self.config.network.get('weight', 0.1))
        return make_schedule(theta_l, theta_h, alpha, self.config.l0, self.config.h0)

    def _propagate(self, graph: Graph, cell: Cell, seeds: Sequence[int]) -> PropagationResult:
        x0 = np.zeros(graph.n)
        x0[list(seeds)] = self.config.h0
        result = evaluate_influence(graph, self._schedule(graph, cell), self.config.propagation, x0)
        if not result.converged:
            with self._lock:
                self.non_converged += 1
        return result

    def _problem(self, graph: Graph, cell: Cell, k: int) -> ImProblem:
        cfg = self.config
        prop = cfg.propagation
        return ImProblem(
            graph=graph,
            schedule=self._schedule(graph, cell),
            k=k,
            gamma=prop.gamma,
            eps=prop.eps,
            l0=cfg.l0,
            h0=cfg.h0,
            t_max=prop.t_max,
            allow_partial=True,
            brute_force_cap=int(cfg.solver.get('brute_force_cap', 10 ** 7))
        )

    def _cds_params(self, restart: str = 'none') -> CdsParams:
        solver = self.config.solver
        return CdsParams(
            zeta=float(solver.get('zeta', 0.1)),
            delta=float(solver.get('delta', 0.5)),
            d=int(solver.get('radius', 2)),
            restart=restart,
            poll_batch=int(solver.get('poll_batch', 32))
        )

    def _cds_variants(self) -> List[Tuple[str, CdsParams]]:
        variants = [('cds', self._cds_params())]
        if self.config.solver.get('restart', 'none') == 'community':
            variants.append(('cds_community', self._cds_params('community')))
        return variants

    def _brute_threads(self, count: int) -> int:
        return self.config.threads if count == 1 else 1

    def _track(self, objective: InfluenceObjective):
        if objective.non_converged:
            with self._lock:
                self.non_converged += objective.non_converged

    def _k_values(self, n: int) -> List[int]:
        solver = self.config.solver
        if 'k_values' in solver:
            values = [int(k) for k in _as_list(solver['k_values'])]
        else:
            values = [int(solver.get('k', 4))]
        bad = [k for k in values if not 1 <= k <= n]
        if bad:
            raise ConfigError(f"预算 k 超出 [1, {n}]: {bad}")
        return values

    # ------------------------------------------------------------------
    # 传播实验
    # ------------------------------------------------------------------

    def _seed_sets(self, default: List[List[int]]) -> List[List[int]]:
        sets = self.config.seeds.get('sets', default)
        if not sets or any(len(s) == 0 for s in sets):
            raise ConfigError("种子集合不能为空")
        return [sorted(int(i) for i in s) for s in sets]

    @staticmethod
    def _series(values: np.ndarray, horizon: Optional[int]) -> np.ndarray:
        """截取或延长到 t = 0..horizon, 收敛后保持最后一个值"""
        if horizon is None:
            return values
        if len(values) > horizon:
            return values[:horizon + 1]
        return np.concatenate([values, np.full(horizon + 1 - len(values), values[-1])])

    def _base_row(self, index: int, seeds: Sequence[int], cell: Cell) -> Dict:
        return {
            'kind': self.config.kind,
            'replicate': index,
            'seed_set': seed_label(seeds),
            'theta_l': cell[0],
            'theta_h': cell[1],
        }

    def run_propagate(self) -> Tuple[List[Dict], int]:
        """给定种子集合的 s(t), n_a(t) 与总影响力"""
        cfg = self.config
        horizon = cfg.model.get('horizon')

        def task(index: int, graph: Graph) -> List[Dict]:
            rows = []
            for seeds in self._seed_sets([[0]]):
                self._check_seeds(graph, seeds)
                for cell in cfg.cells:
                    result = self._propagate(graph, cell, seeds)
                    base = self._base_row(index, seeds, cell)
                    s_t = self._series(result.s_of_t, horizon)
                    n_a = self._series(result.n_a_of_t, horizon)
                    rows.extend({**base, 't': t, 'metric': 's_t', 'value': float(v)} for t, v in enumerate(s_t))
                    rows.extend({**base, 't': t, 'metric': 'n_a', 'value': float(v)} for t, v in enumerate(n_a))
                    rows.append({**base, 't': None, 'metric': 'total', 'value': result.total})
                    rows.append({**base, 't': None, 'metric': 'steps', 'value': float(result.steps)})
            return rows

        logger.info(f"步骤 1/1: 传播 {len(cfg.cells)} 个参数格子")
        return self._replicates(task)

    def run_sbm_effects(self) -> Tuple[List[Dict], int]:
        """
        SBM上同社区与跨社区种子集合的比较

        种子集合按相邻两两配对 (sets[0] 对 sets[1], sets[2] 对 sets[3], ...),
        每对输出总影响力之比 δ.
        """
        cfg = self.config
        n1 = int(cfg.network.get('n1', 25))
        sets = self._seed_sets([[0, 1], [0, n1], [0, 1, 2, 3], [0, 1, n1, n1 + 1]])
        if len(sets) % 2 != 0:
            raise ConfigError("sbm-effects 的种子集合必须成对给出")

        def task(index: int, graph: Graph) -> List[Dict]:
            if graph.communities is None:
                raise ConfigError("sbm-effects 需要带社区标记的网络")
            rows = []
            for cell in cfg.cells:
                totals = []
                for seeds in sets:
                    self._check_seeds(graph, seeds)
                    result = self._propagate(graph, cell, seeds)
                    base = self._base_row(index, seeds, cell)
                    s_t = self._series(result.s_of_t, cfg.horizon)
                    rows.extend({**base, 't': t, 'metric': 's_t', 'value': float(v)} for t, v in enumerate(s_t))
                    rows.append({**base, 't': 1, 'metric': 'one_step', 'value': float(s_t[1] - s_t[0])})
                    rows.append({**base, 't': None, 'metric': 'total', 'value': result.total})
                    totals.append(result.total)

                for first, second in zip(range(0, len(sets), 2), range(1, len(sets), 2)):
                    label = f"{seed_label(sets[first])}/{seed_label(sets[second])}"
                    ratio = totals[first] / totals[second] if totals[second] > 0 else float('nan')
                    rows.append({**self._base_row(index, [], cell), 'seed_set': label,
                                 't': None, 'metric': 'ratio', 'value': ratio})
            return rows

        logger.info(f"步骤 1/1: {len(sets)} 个种子集合 x {len(cfg.cells)} 个参数格子")
        return self._replicates(task)

    def run_coexistence(self) -> Tuple[List[Dict], int]:
        """组合网络上不同参数下的 n_a(t), 种子分别位于格子部分和随机部分"""
        cfg = self.config
        n_half = int(cfg.network.get('lattice_size', 25))
        sets = self._seed_sets([[0, 1, 2, 3], [n_half, n_half + 1, n_half + 2, n_half + 3]])
        horizon = int(cfg.model.get('horizon', 20))

        def task(index: int, graph: Graph) -> List[Dict]:
            rows = []
            bridges = count_bridges(graph, n_half)
            for cell in cfg.cells:
                for seeds in sets:
                    self._check_seeds(graph, seeds)
                    result = self._propagate(graph, cell, seeds)
                    base = self._base_row(index, seeds, cell)
                    n_a = self._series(result.n_a_of_t, horizon)
                    rows.extend({**base, 't': t, 'metric': 'n_a', 'value': float(v)} for t, v in enumerate(n_a))
                    rows.append({**base, 't': None, 'metric': 'reached', 'value': float(result.n_a_of_t[-1])})
                    rows.append({**base, 't': None, 'metric': 'bridges', 'value': float(bridges)})
            return rows

        logger.info(f"步骤 1/1: 组合网络, {len(cfg.cells)} 种参数")
        return self._replicates(task)

    @staticmethod
    def _check_seeds(graph: Graph, seeds: Sequence[int]):
        if min(seeds) < 0 or max(seeds) >= graph.n:
            raise ConfigError(f"种子节点超出范围 [0, {graph.n}): {list(seeds)}")

    # ------------------------------------------------------------------
    # 影响力最大化实验
    # ------------------------------------------------------------------

    def _method_row(self, index: int, k: int, cell: Cell, method: str, metric: str, value: float) -> Dict:
        return {
            'kind': self.config.kind,
            'replicate': index,
            'k': k,
            'theta_l': cell[0],
            'theta_h': cell[1],
            'method': method,
            'metric': metric,
            'value': float(value),
        }

    def _against_brute_force(self, index: int, graph: Graph, count: int, with_katz: bool) -> List[Dict]:
        rows = []
        for cell in self.config.cells:
            for k in self._k_values(graph.n):
                problem = self._problem(graph, cell, k)
                reference = InfluenceObjective(problem)
                ranking = BruteForceSolver(threads=self._brute_threads(count)).rank(problem, reference)
                self._track(reference)
                rows.append(self._method_row(index, k, cell, 'brute', 'optimum', ranking.best))

                solvers = [(name, CdsSolver(params)) for name, params in self._cds_variants()]
                if with_katz:
                    solvers.append(('katz', CentralitySolver('katz')))

                for name, solver in solvers:
                    objective = InfluenceObjective(problem)
                    outcome = solver.solve(problem, objective)
                    self._track(objective)
                    rows.append(self._method_row(index, k, cell, name, 'objective', outcome.objective))
                    rows.append(self._method_row(index, k, cell, name, 'accuracy', accuracy(outcome.objective, ranking)))
                    rows.append(self._method_row(index, k, cell, name, 'rank', rank_metric(outcome.objective, ranking)))
                    rows.append(self._method_row(index, k, cell, name, 'n_evals', outcome.n_evals))

                logger.info(
                    f"样本 {index}, θ=({cell[0]}, {cell[1]}), k={k}: 最优值 {ranking.best:.6g}"
                )
        return rows

    def run_im_accuracy_grid(self) -> Tuple[List[Dict], int]:
        """CDS相对穷举的准确率 τ 与排名 φ, 遍历 (θ_l, θ_h) 网格"""
        logger.info(f"步骤 1/1: {len(self.config.cells)} 个参数格子, 穷举 + CDS")
        count = self.config.n_samples if is_random_network(self.config.network) else 1
        return self._replicates(lambda index, graph: self._against_brute_force(index, graph, count, False))

    def run_im_budget_sweep(self) -> Tuple[List[Dict], int]:
        """CDS与Katz初始解相对穷举的准确率和排名, 遍历预算k"""
        logger.info("步骤 1/1: 预算扫描, 穷举 + CDS + Katz")
        count = self.config.n_samples if is_random_network(self.config.network) else 1
        return self._replicates(lambda index, graph: self._against_brute_force(index, graph, count, True))

    def run_method_compare(self) -> Tuple[List[Dict], int]:
        """
        CDS与随机选取, 度中心性, Katz中心性的比较

        随机方法重复 n_r 次 (每次 n_s 个样本), 报告均值和标准差.
        """
        cfg = self.config
        methods = _as_list(cfg.solver.get('methods', ['cds', 'random', 'degree', 'katz']))
        n_s = int(cfg.solver.get('n_s', 100))
        n_r = int(cfg.solver.get('n_r', 10))

        def task(index: int, graph: Graph) -> List[Dict]:
            rows = []
            for cell in cfg.cells:
                for k in self._k_values(graph.n):
                    problem = self._problem(graph, cell, k)
                    objective = InfluenceObjective(problem)
                    for method in methods:
                        if method == 'random':
                            values = []
                            for r in range(n_r):
                                seed = int(np.random.SeedSequence([cfg.base_seed, index, r]).generate_state(1)[0])
                                values.append(RandomSamplingSolver(n_s, seed).solve(problem, objective).objective)
                            stats = summarize(values)
                            rows.append(self._method_row(index, k, cell, method, 'objective_mean', stats.mean))
                            rows.append(self._method_row(index, k, cell, method, 'objective_sd', stats.sd))
                            continue

                        if method == 'cds':
                            solver = CdsSolver(self._cds_params())
                        elif method in ('degree', 'katz'):
                            solver = CentralitySolver(method)
                        else:
                            raise ConfigError(f"未知比较方法: {method}")
                        outcome = solver.solve(problem, objective)
                        rows.append(self._method_row(index, k, cell, method, 'objective', outcome.objective))
                    self._track(objective)
            return rows

        logger.info(f"步骤 1/1: 方法比较 {methods}")
        return self._replicates(task)

    def run_budget_saturation(self) -> Tuple[List[Dict], int]:
        """穷举最优值随预算的变化 s*(k) / s*_max"""
        cfg = self.config
        count = cfg.n_samples if is_random_network(cfg.network) else 1

        def task(index: int, graph: Graph) -> List[Dict]:
            ks = [int(k) for k in _as_list(cfg.solver['k_values'])] if 'k_values' in cfg.solver \
                else list(range(1, graph.n + 1))
            rows = []
            for cell in cfg.cells:
                optima = []
                for k in ks:
                    problem = self._problem(graph, cell, k)
                    objective = InfluenceObjective(problem)
                    optima.append(BruteForceSolver(threads=self._brute_threads(count)).rank(problem, objective).best)
                    self._track(objective)

                top = max(optima)
                for k, best in zip(ks, optima):
                    base = {'kind': cfg.kind, 'replicate': index, 'k': k, 'theta_l': cell[0], 'theta_h': cell[1]}
                    rows.append({**base, 'metric': 'optimum', 'value': best})
                    rows.append({**base, 'metric': 'ratio', 'value': best / top if top > 0 else 1.0})
            return rows

        logger.info("步骤 1/1: 预算饱和曲线")
        return self._replicates(task)

    def run_runtime_sweep(self) -> Tuple[List[Dict], int]:
        """
        不同网络规模下CDS的耗时和评估次数

        network.n_values 给出一组规模, 每个规模使用同一个平均度数的ER随机图.
        """
        cfg = self.config
        n_values = [int(n) for n in _as_list(cfg.network.get('n_values', [cfg.network.get('n', 50)]))]
        total = 0
        rows: List[Dict] = []

        for step, n in enumerate(n_values, start=1):
            logger.info(f"步骤 {step}/{len(n_values)}: n={n}")
            network = {**cfg.network, 'type': cfg.network.get('type', 'er'), 'n': n}
            network.pop('n_values', None)

            def task(index: int, graph: Graph, n=n) -> List[Dict]:
                out = []
                for cell in cfg.cells:
                    for k in self._k_values(n):
                        problem = self._problem(graph, cell, k)
                        objective = InfluenceObjective(problem)
                        outcome = CdsSolver(self._cds_params()).solve(problem, objective)
                        self._track(objective)
                        base = {'kind': cfg.kind, 'replicate': index, 'n': n, 'k': k,
                                'theta_l': cell[0], 'theta_h': cell[1]}
                        neighbors = k * (n - k)
                        out.append({**base, 'metric': 'elapsed', 'value': outcome.elapsed_seconds})
                        out.append({**base, 'metric': 'n_evals', 'value': float(outcome.n_evals)})
                        out.append({**base, 'metric': 'evals_per_neighbor',
                                    'value': outcome.n_evals / neighbors if neighbors else float('nan')})
                        out.append({**base, 'metric': 'objective', 'value': outcome.objective})
                return out

            chunk, count = self._replicates(task, network)
            rows.extend(chunk)
            total = max(total, count)

        return rows, total


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """运行一次实验"""
    return ExperimentRunner(config).run()
