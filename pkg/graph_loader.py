"""
网络数据读取模块
读取/保存边列表文件, 并根据配置构造实验网络
"""

import io
import math
import logging
from pathlib import Path
from typing import BinaryIO, Dict, TextIO, Union

from exceptions import ConfigError, EdgeListFormatError
from graph_generators import (
    CompositeConfig,
    SbmConfig,
    generate_composite,
    generate_er,
    generate_lattice,
    generate_sbm,
)
from network_graph import Graph

logger = logging.getLogger(__name__)

KARATE_CLUB_PATH = Path(__file__).resolve().parent / "data" / "karate_club.txt"

EdgeSource = Union[str, Path, bytes, BinaryIO, TextIO]


def _read_text(source: EdgeSource) -> str:
    if isinstance(source, bytes):
        return source.decode('utf-8')
    if hasattr(source, 'read'):
        data = source.read()
        return data.decode('utf-8') if isinstance(data, bytes) else data
    with open(source, 'r', encoding='utf-8') as f:
        return f.read()


def load_edge_list(source: EdgeSource, default_weight: float = 1.0, bidirectional: bool = False) -> Graph:
    """
    读取边列表

    每个非注释行为 `src dst [weight]`, 以 # 开头的行为注释. 节点名称按首次
    出现的顺序映射为 0, 1, 2, ..., 原始名称保存在 graph.labels 中.

    Args:
        source: 文件路径, 字节串或文件对象
        default_weight: 省略权重时使用的默认权重
        bidirectional: 为每一行额外添加反向边

    Returns:
        Graph对象
    """
    if not default_weight > 0:
        raise EdgeListFormatError(f"默认权重必须为正: {default_weight}")

    index: Dict[str, int] = {}
    labels = []
    edges = {}

    def node_id(name: str) -> int:
        if name not in index:
            index[name] = len(labels)
            labels.append(name)
        return index[name]

    def add_edge(i: int, j: int, w: float, line_number: int):
        if (i, j) in edges:
            raise EdgeListFormatError(f"重复的边 {labels[i]} -> {labels[j]}", line_number)
        edges[(i, j)] = w

    for line_number, raw in enumerate(io.StringIO(_read_text(source)), start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue

        tokens = line.split()
        if len(tokens) not in (2, 3):
            raise EdgeListFormatError(f"应为 'src dst [weight]', 实际为: {line!r}", line_number)

        if len(tokens) == 3:
            try:
                w = float(tokens[2])
            except ValueError:
                raise EdgeListFormatError(f"无法解析权重: {tokens[2]!r}", line_number)
        else:
            w = default_weight

        if not (math.isfinite(w) and w > 0):
            raise EdgeListFormatError(f"权重必须为有限正数: {tokens[2]}", line_number)
        if tokens[0] == tokens[1]:
            raise EdgeListFormatError(f"不允许自环: {tokens[0]}", line_number)

        i, j = node_id(tokens[0]), node_id(tokens[1])
        add_edge(i, j, w, line_number)
        if bidirectional:
            add_edge(j, i, w, line_number)

    logger.info(f"读取边列表: {len(labels)} 个节点, {len(edges)} 条有向边")
    return Graph.from_edges(len(labels), ((i, j, w) for (i, j), w in edges.items()), labels=labels)


def save_edge_list(graph: Graph, path: Union[str, Path]):
    """
    以 `src dst weight` 格式保存图, 使用节点标签

    Args:
        graph: 要保存的图
        path: 输出文件路径
    """
    src, dst, w = graph.edges()
    lines = [f"# n={graph.n} m={graph.m}"]
    lines.extend(
        f"{graph.label_of(i)} {graph.label_of(j)} {weight:.17g}"
        for i, j, weight in zip(src.tolist(), dst.tolist(), w.tolist())
    )
    Path(path).write_text("\n".join(lines) + "\n", encoding='utf-8')
    logger.info(f"图已保存到 {path}")


def load_karate_club(weight: float = 0.1) -> Graph:
    """空手道俱乐部网络 (34个节点, 78条无向边), 每条边拆为两条有向边"""
    return load_edge_list(KARATE_CLUB_PATH, default_weight=weight, bidirectional=True)


def build_network(network: Dict, seed: int = 0) -> Graph:
    """
    根据配置字典构造网络

    Args:
        network: 网络配置, 'type' 取 sbm, er, lattice, composite, edge_list, karate
        seed: 本次样本使用的随机种子

    Returns:
        Graph对象
    """
    kind = network.get('type', 'sbm')
    weight = network.get('weight', 0.1)

    def er_graph():
        n = network['n']
        p = network['p'] if 'p' in network else network['mean_degree'] / (n - 1)
        return generate_er(n, p, weight, seed)

    network_map = {
        'sbm': lambda: generate_sbm(SbmConfig(
            n1=network.get('n1', 25),
            n2=network.get('n2', 25),
            p1=network.get('p1', 0.9),
            p2=network.get('p2', network.get('p1', 0.9)),
            p12=network.get('p12', 0.1),
            weight=weight,
            seed=seed,
            self_loops=network.get('self_loops', False)
        )),
        'er': er_graph,
        'lattice': lambda: generate_lattice(network['n'], network.get('d', 4), weight),
        'composite': lambda: generate_composite(CompositeConfig(
            lattice_size=network.get('lattice_size', 25),
            lattice_degree=network.get('lattice_degree', 4),
            er_prob=network.get('er_prob'),
            bridge_prob=network.get('bridge_prob', 0.01),
            weight=weight,
            seed=seed
        )),
        'edge_list': lambda: load_edge_list(
            network['path'],
            default_weight=network.get('default_weight', weight),
            bidirectional=network.get('bidirectional', False)
        ),
        'karate': lambda: load_karate_club(weight),
    }

    if kind not in network_map:
        raise ConfigError(f"未知网络类型: {kind}")

    try:
        return network_map[kind]()
    except KeyError as e:
        raise ConfigError(f"网络配置缺少字段: {e}")


def is_random_network(network: Dict) -> bool:
    """该网络配置是否依赖随机种子 (决定是否需要多个样本)"""
    return network.get('type', 'sbm') in ('sbm', 'er', 'composite')
