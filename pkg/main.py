"""
GIP传播模型与影响力最大化主程序 (gipmax)
提供网络生成, 传播评估, 中心性计算, 影响力最大化和实验运行五个子命令
"""

import os
import sys
import json
import yaml
import logging
import argparse
from pathlib import Path
from datetime import datetime
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from bound_schedules import make_schedule
from centrality import NetworkCentrality
from exceptions import ConfigError, GipError, NonConvergentError
from experiment_reports import generate_report, save_outputs, save_trajectory
from experiment_runner import ExperimentConfig, run_experiment
from graph_loader import KARATE_CLUB_PATH, build_network, load_edge_list, save_edge_list
from im_problem import ImProblem, InfluenceObjective
from im_solvers import create_solver
from network_graph import Graph, mean_weight
from propagation_engine import PropagationConfig, evaluate_influence

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent / "config.yaml"
THREADS_ENV = "GIPMAX_THREADS"

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NON_CONVERGENT = 3


def setup_logging(level: str = "INFO", log_dir: Optional[str] = "logs"):
    """配置日志: 控制台 + logs/gipmax_<时间>.log"""
    handlers = [logging.StreamHandler()]
    if log_dir:
        Path(log_dir).mkdir(parents=True, exist_ok=True)
        handlers.append(
            logging.FileHandler(f'{log_dir}/gipmax_{datetime.now().strftime("%Y%m%d_%H%M%S")}.log', encoding='utf-8')
        )
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True
    )


def _merge(base: Dict, override: Dict) -> Dict:
    merged = dict(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(config_path: str = "config.yaml") -> dict:
    """
    加载配置文件 (YAML, JSON文档同样可以读取), 覆盖默认配置 config.yaml

    Args:
        config_path: 配置文件路径

    Returns:
        合并后的配置字典
    """
    defaults = {}
    if DEFAULT_CONFIG_PATH.exists():
        with open(DEFAULT_CONFIG_PATH, 'r', encoding='utf-8') as f:
            defaults = yaml.safe_load(f) or {}

    path = Path(config_path)
    if path.resolve() == DEFAULT_CONFIG_PATH:
        return defaults

    with open(path, 'r', encoding='utf-8') as f:
        config = yaml.safe_load(f) or {}
    if not isinstance(config, dict):
        raise ConfigError(f"配置文件顶层必须是映射: {config_path}")

    return _merge(defaults, config)


def resolve_threads(cli_threads: Optional[int], configured: int = 1) -> int:
    """线程数: 命令行 > 环境变量 GIPMAX_THREADS > 配置文件"""
    if cli_threads is not None:
        threads = cli_threads
    elif os.environ.get(THREADS_ENV):
        try:
            threads = int(os.environ[THREADS_ENV])
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} 必须是整数: {os.environ[THREADS_ENV]!r}")
    else:
        threads = configured
    if threads < 1:
        raise ConfigError(f"线程数必须 >= 1: {threads}")
    return threads


def load_graph(args) -> Graph:
    """读取命令行指定的图, 'karate' 表示内置的空手道俱乐部网络"""
    if args.graph == 'karate':
        return load_edge_list(KARATE_CLUB_PATH, default_weight=args.default_weight, bidirectional=True)
    return load_edge_list(args.graph, default_weight=args.default_weight, bidirectional=args.bidirectional)


def resolve_nodes(graph: Graph, names: Sequence[str]) -> List[int]:
    """把节点标签 (或无标签时的编号) 转换为内部编号"""
    if graph.labels is None:
        return [int(name) for name in names]
    index = {label: i for i, label in enumerate(graph.labels)}
    missing = [name for name in names if name not in index]
    if missing:
        raise ConfigError(f"图中不存在节点: {missing}")
    return [index[name] for name in names]


def _schedule_for(graph: Graph, args):
    alpha = mean_weight(graph) if args.theta_l is not None else 1.0
    schedule = make_schedule(args.theta_l, args.theta_h, alpha, args.l0, args.h0)
    logger.info(f"边界函数: {schedule.name}, 参数 {schedule.describe()}")
    return schedule


def _print_json(document: Dict):
    print(json.dumps(document, ensure_ascii=False, indent=2))


def cmd_generate(args, config: dict) -> int:
    """生成合成网络并保存为边列表"""
    network = dict(config.get('network', {}))
    if args.type:
        network = {'type': args.type}
    for key in ('n', 'n1', 'n2', 'p1', 'p2', 'p12', 'p', 'd', 'weight', 'mean_degree', 'lattice_size',
                'lattice_degree', 'bridge_prob'):
        value = getattr(args, key, None)
        if value is not None:
            network[key] = value
    if args.self_loops:
        network['self_loops'] = True

    graph = build_network(network, args.seed)
    save_edge_list(graph, args.out)
    logger.info(f"生成网络 {network.get('type')}: n={graph.n}, m={graph.m}")
    return EXIT_OK


def cmd_propagate(args, config: dict) -> int:
    """评估给定种子集合的总影响力"""
    graph = load_graph(args)
    seeds = resolve_nodes(graph, args.seeds)
    x0 = np.zeros(graph.n)
    x0[seeds] = args.h0

    prop = PropagationConfig(gamma=args.gamma, eps=args.eps, t_max=args.t_max,
                             record_trajectory=args.trajectory is not None)
    schedule = _schedule_for(graph, args)
    result = evaluate_influence(graph, schedule, prop, x0)
    if args.trajectory:
        save_trajectory(result, args.trajectory, graph.labels)

    document = result.to_dict()
    document['s_of_t'] = result.s_of_t.tolist()
    document['n_a_of_t'] = result.n_a_of_t.tolist()
    document['schedule'] = schedule.describe()
    _print_json(document)

    if not result.converged and not args.allow_partial:
        return EXIT_NON_CONVERGENT
    return EXIT_OK


def cmd_centrality(args, config: dict) -> int:
    """计算中心性, 以CSV (node,score) 输出到标准输出; --top 时只输出得分最高的节点并按排名排序"""
    graph = load_graph(args)
    if args.kind == 'katz':
        c = NetworkCentrality.katz_centrality(graph, args.factor)
    else:
        c = NetworkCentrality.degree_centrality(graph)

    order = NetworkCentrality.top_k(c, 1.0, args.top) if args.top else range(graph.n)
    table = pd.DataFrame({
        'node': [graph.label_of(i) for i in order],
        'score': [float(c.values[i]) for i in order],
    })
    if args.top:
        table = table.sort_values('score', ascending=False, kind='mergesort')
    sys.stdout.write(table.to_csv(index=False))
    return EXIT_OK


def cmd_maximize(args, config: dict) -> int:
    """求解影响力最大化问题"""
    graph = load_graph(args)
    schedule = _schedule_for(graph, args)
    problem = ImProblem(
        graph=graph,
        schedule=schedule,
        k=args.k,
        gamma=args.gamma,
        eps=args.eps,
        l0=args.l0,
        h0=args.h0,
        t_max=args.t_max,
        allow_partial=args.allow_partial,
        brute_force_cap=config.get('solver', {}).get('brute_force_cap', 10 ** 7)
    )
    solver = create_solver(args.method, {
        'zeta': args.zeta,
        'delta': args.delta,
        'radius': args.radius,
        'restart': args.restart,
        'n_s': args.n_s,
        'seed': args.seed,
        'threads': resolve_threads(args.threads, config.get('experiment', {}).get('threads', 1)),
    })

    objective = InfluenceObjective(problem)
    outcome = solver.solve(problem, objective)
    _print_json({
        'method': outcome.method,
        'seed_set': [graph.label_of(i) for i in outcome.seed_set],
        'objective': outcome.objective,
        'n_evals': outcome.n_evals,
        'elapsed': outcome.elapsed_seconds,
        'schedule': schedule.describe(),
    })
    if objective.non_converged:
        logger.warning(f"{objective.non_converged} 次评估未收敛, 结果为部分和")
    return EXIT_OK


def cmd_experiment(args, config: dict) -> int:
    """运行配置文件描述的实验"""
    experiment = config.setdefault('experiment', {})
    experiment['threads'] = resolve_threads(args.threads, experiment.get('threads', 1))
    if args.paper_scale:
        experiment['paper_scale'] = True
    if args.allow_partial:
        experiment['allow_partial'] = True
    if args.samples is not None:
        experiment['samples'] = args.samples

    exp_config = ExperimentConfig.from_dict(config)
    logger.info(f"步骤 1/2: 运行实验 {exp_config.kind}, 样本数 {exp_config.n_samples}, 线程数 {exp_config.threads}")
    result = run_experiment(exp_config)

    logger.info("步骤 2/2: 保存结果")
    output = config.get('output', {})
    out_dir = args.out or output.get('dir', 'results')
    paths = save_outputs(result, out_dir, gnuplot_stub=args.gnuplot_stub or output.get('gnuplot_stub', False))
    print("\n" + generate_report(result))
    for name, path in paths.items():
        logger.info(f"{name}: {path}")

    if result.non_converged and not exp_config.allow_partial:
        logger.error(f"{result.non_converged} 次传播未收敛 (使用 --allow-partial 接受部分和)")
        return EXIT_NON_CONVERGENT
    return EXIT_OK


def _add_graph_args(parser: argparse.ArgumentParser):
    parser.add_argument('graph', type=str, help="边列表文件路径, 或 'karate'")
    parser.add_argument('--bidirectional', action='store_true', help='每行同时添加反向边')
    parser.add_argument('--default-weight', type=float, default=0.1, help='省略权重时的默认权重')


def _add_model_args(parser: argparse.ArgumentParser):
    parser.add_argument('--theta-l', type=float, default=None, help='下界阈值 θ_l (省略时为EIC极限)')
    parser.add_argument('--theta-h', type=float, default=None, help='上界阈值 θ_h (默认等于 θ_l)')
    parser.add_argument('--gamma', type=float, default=0.0, help='时间折扣 γ')
    parser.add_argument('--eps', type=float, default=1e-10, help='收敛容差 ε')
    parser.add_argument('--t-max', type=int, default=10000, help='最大传播步数')
    parser.add_argument('--l0', type=float, default=1.0, help='初始下界 l_{j,0}')
    parser.add_argument('--h0', type=float, default=1.0, help='初始上界 h_{j,0}')
    parser.add_argument('--allow-partial', action='store_true', help='未收敛时接受部分和')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='gipmax', description='GIP传播模型与影响力最大化工具')
    parser.add_argument('--config', type=str, default='config.yaml', help='配置文件路径')
    parser.add_argument('--log-level', type=str, default=None, help='日志级别 (DEBUG, INFO, WARNING, ERROR)')
    parser.add_argument('--log-dir', type=str, default='logs', help='日志目录')
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('generate', help='生成合成网络')
    gen.add_argument('--type', choices=['sbm', 'er', 'lattice', 'composite'], default=None)
    gen.add_argument('--out', type=str, required=True, help='输出边列表路径')
    gen.add_argument('--seed', type=int, default=0)
    for name, kind in (('n', int), ('n1', int), ('n2', int), ('d', int), ('lattice-size', int),
                       ('lattice-degree', int), ('p1', float), ('p2', float), ('p12', float), ('p', float),
                       ('weight', float), ('mean-degree', float), ('bridge-prob', float)):
        gen.add_argument(f'--{name}', type=kind, default=None)
    gen.add_argument('--self-loops', action='store_true', help='SBM中允许自环')

    prop = sub.add_parser('propagate', help='评估种子集合的总影响力')
    _add_graph_args(prop)
    _add_model_args(prop)
    prop.add_argument('--seeds', type=str, nargs='+', required=True, help='种子节点标签')
    prop.add_argument('--trajectory', type=str, default=None, help='轨迹CSV输出路径 (t,node,x)')

    cen = sub.add_parser('centrality', help='计算中心性')
    _add_graph_args(cen)
    cen.add_argument('--kind', choices=['katz', 'degree'], default='katz')
    cen.add_argument('--factor', type=float, default=1.0, help='Katz衰减因子 (影响力最大化中为 1-γ)')
    cen.add_argument('--top', type=int, default=0, help='输出得分最高的节点个数')

    mx = sub.add_parser('maximize', help='影响力最大化')
    _add_graph_args(mx)
    _add_model_args(mx)
    mx.add_argument('--method', choices=['cds', 'brute', 'random', 'degree', 'katz', 'exact_linear'], default='cds')
    mx.add_argument('--k', type=int, required=True, help='预算k')
    mx.add_argument('--zeta', type=float, default=0.1)
    mx.add_argument('--delta', type=float, default=0.5)
    mx.add_argument('--radius', type=int, default=2, help='邻域半径 d (偶数)')
    mx.add_argument('--restart', choices=['none', 'community'], default='none')
    mx.add_argument('--n-s', type=int, default=100, help='随机方法的采样次数')
    mx.add_argument('--seed', type=int, default=0)
    mx.add_argument('--threads', type=int, default=None)

    exp = sub.add_parser('experiment', help='运行实验')
    exp.add_argument('--config', dest='experiment_config', type=str, default=None,
                     help='实验配置文件路径 (覆盖全局 --config)')
    exp.add_argument('--out', type=str, default=None, help='输出目录')
    exp.add_argument('--paper-scale', action='store_true', help='使用完整规模的样本数 (paper_scale_samples)')
    exp.add_argument('--samples', type=int, default=None, help='覆盖样本数')
    exp.add_argument('--threads', type=int, default=None)
    exp.add_argument('--gnuplot-stub', action='store_true', help='额外输出gnuplot数据文件')
    exp.add_argument('--allow-partial', action='store_true', help='未收敛时接受部分和')

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """主函数, 返回进程退出码"""
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, 'experiment_config', None):
        args.config = args.experiment_config

    try:
        config = load_config(args.config)
    except FileNotFoundError:
        setup_logging(args.log_level or "INFO", args.log_dir)
        logger.error(f"配置文件未找到: {args.config}")
        return EXIT_VALIDATION
    except (yaml.YAMLError, GipError) as e:
        setup_logging(args.log_level or "INFO", args.log_dir)
        logger.error(f"配置文件无法解析: {e}")
        return EXIT_VALIDATION

    setup_logging(args.log_level or config.get('output', {}).get('log_level', 'INFO'), args.log_dir)

    command_map = {
        'generate': cmd_generate,
        'propagate': cmd_propagate,
        'centrality': cmd_centrality,
        'maximize': cmd_maximize,
        'experiment': cmd_experiment,
    }

    try:
        return command_map[args.command](args, config)
    except NonConvergentError as e:
        logger.error(f"未收敛: {e}")
        return EXIT_NON_CONVERGENT
    except (GipError, ValueError, FileNotFoundError) as e:
        logger.error(f"参数或输入错误: {e}")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
