"""
实验结果输出模块
结果表的列定义与校验, CSV/JSON/gnuplot数据输出, 传播轨迹导出和文本报告
"""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd
from scipy import stats

from propagation_engine import PropagationResult

logger = logging.getLogger(__name__)

_SERIES_COLUMNS = ['kind', 'replicate', 'seed_set', 'theta_l', 'theta_h', 't', 'metric', 'value']
_METHOD_COLUMNS = ['kind', 'replicate', 'k', 'theta_l', 'theta_h', 'method', 'metric', 'value']

RESULT_COLUMNS: Dict[str, List[str]] = {
    'propagate': _SERIES_COLUMNS,
    'sbm-effects': _SERIES_COLUMNS,
    'coexistence': _SERIES_COLUMNS,
    'im-accuracy-grid': _METHOD_COLUMNS,
    'im-budget-sweep': _METHOD_COLUMNS,
    'method-compare': _METHOD_COLUMNS,
    'budget-saturation': ['kind', 'replicate', 'k', 'theta_l', 'theta_h', 'metric', 'value'],
    'runtime-sweep': ['kind', 'replicate', 'n', 'k', 'theta_l', 'theta_h', 'metric', 'value'],
}

NUMERIC_COLUMNS = ('theta_l', 'theta_h', 't', 'value')
INTEGER_COLUMNS = ('replicate', 'k', 'n')

FLOAT_FORMAT = '%.12g'


def validate_rows(kind: str, table: pd.DataFrame) -> pd.DataFrame:
    """
    按实验类型校验结果表的列, 并统一数值列的类型

    Args:
        kind: 实验类型
        table: 结果表

    Returns:
        列顺序与 RESULT_COLUMNS[kind] 一致的新表
    """
    if kind not in RESULT_COLUMNS:
        raise ValueError(f"未知实验类型: {kind}")
    columns = RESULT_COLUMNS[kind]
    missing = [c for c in columns if c not in table.columns]
    extra = [c for c in table.columns if c not in columns]
    if missing or extra:
        raise ValueError(f"{kind} 结果表列不匹配: 缺少 {missing}, 多余 {extra}")

    table = table[columns].copy()
    if len(table) and table['metric'].isna().any():
        raise ValueError(f"{kind} 结果表中存在没有指标名称的行")

    for column in columns:
        if column in NUMERIC_COLUMNS:
            table[column] = pd.to_numeric(table[column], errors='raise').astype(float)
        elif column in INTEGER_COLUMNS:
            table[column] = pd.to_numeric(table[column], errors='raise').astype(np.int64)
    return table


def save_results_csv(table: pd.DataFrame, filepath: Union[str, Path]):
    """
    保存结果表, 同一个表总是得到相同的文件内容

    Args:
        table: 结果表
        filepath: 保存路径
    """
    table.to_csv(filepath, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info(f"结果已保存到 {filepath}")


def summarize_table(table: pd.DataFrame) -> pd.DataFrame:
    """
    跨样本汇总: 按除 replicate 和 value 以外的列分组, 计算均值, 标准误, 标准差和样本数
    """
    keys = [c for c in table.columns if c not in ('replicate', 'value')]
    grouped = table.groupby(keys, dropna=False, sort=True)['value']
    summary = grouped.agg(
        mean='mean',
        se=lambda v: float(stats.sem(v)) if len(v) > 1 else float('nan'),
        sd=lambda v: float(np.std(v, ddof=1)) if len(v) > 1 else float('nan'),
        count='count'
    )
    return summary.reset_index()


def _json_value(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return None if np.isnan(value) else float(value)
    return value


def save_summary_json(result, filepath: Union[str, Path]):
    """
    保存JSON汇总: 运行统计 + 每组指标的均值/标准误/样本数

    Args:
        result: ExperimentResult
        filepath: 保存路径
    """
    summary = summarize_table(result.table)
    records = [{k: _json_value(v) for k, v in row.items()} for row in summary.to_dict(orient='records')]
    document = {
        'kind': result.kind,
        'n_replicates': result.n_replicates,
        'non_converged': result.non_converged,
        'connected_fraction': result.connected_fraction,
        'summary': records,
    }
    with open(filepath, 'w', encoding='utf-8') as f:
        json.dump(document, f, ensure_ascii=False, indent=2)
    logger.info(f"汇总已保存到 {filepath}")


def write_gnuplot_stub(table: pd.DataFrame, filepath: Union[str, Path]):
    """
    gnuplot数据文件: 每个 (指标, 参数) 组合一个数据块, 块之间空两行,
    列为 x 坐标 (t, k 或 n), 均值, 标准误
    """
    summary = summarize_table(table)
    x_column = next((c for c in ('t', 'k', 'n') if c in summary.columns), None)
    group_keys = [c for c in summary.columns if c not in (x_column, 'mean', 'se', 'sd', 'count')]

    lines = [f"# x={x_column or 'index'} mean se"]
    for key, block in summary.groupby(group_keys, dropna=False, sort=True):
        key = key if isinstance(key, tuple) else (key,)
        lines.append("# " + " ".join(f"{name}={value}" for name, value in zip(group_keys, key)))
        xs = block[x_column] if x_column else pd.Series(range(len(block)))
        for x, mean, se in zip(xs, block['mean'], block['se']):
            lines.append(f"{FLOAT_FORMAT % x if pd.notna(x) else '-'} {FLOAT_FORMAT % mean} {FLOAT_FORMAT % se}")
        lines.append("")
        lines.append("")

    Path(filepath).write_text("\n".join(lines), encoding='utf-8')
    logger.info(f"gnuplot数据已保存到 {filepath}")


def save_trajectory(result: PropagationResult, filepath: Union[str, Path], labels: Optional[List[str]] = None):
    """
    导出传播轨迹, 每行 t,node,x, 只包含状态为正的节点

    Args:
        result: 记录了轨迹的传播结果 (record_trajectory=True)
        filepath: 保存路径
        labels: 节点标签
    """
    if result.trajectory is None:
        raise ValueError("传播结果没有记录轨迹, 需要 record_trajectory=True")

    rows = []
    for t, nodes, values in result.trajectory:
        for node, x in zip(nodes.tolist(), values.tolist()):
            rows.append({'t': t, 'node': labels[node] if labels else node, 'x': x})
    pd.DataFrame(rows, columns=['t', 'node', 'x']).to_csv(
        filepath, index=False, float_format='%.17g', lineterminator='\n'
    )
    logger.info(f"轨迹已保存到 {filepath}")


def save_outputs(result, out_dir: Union[str, Path], gnuplot_stub: bool = False) -> Dict[str, Path]:
    """
    保存一次实验的全部输出文件

    Returns:
        {'csv': ..., 'json': ..., 'gnuplot': ...}
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = result.kind.replace('-', '_')

    paths = {'csv': out_dir / f"{stem}_results.csv", 'json': out_dir / f"{stem}_summary.json"}
    save_results_csv(result.table, paths['csv'])
    save_summary_json(result, paths['json'])
    if gnuplot_stub:
        paths['gnuplot'] = out_dir / f"{stem}.dat"
        write_gnuplot_stub(result.table, paths['gnuplot'])
    return paths


def generate_report(result) -> str:
    """
    生成文本格式的实验报告

    Args:
        result: ExperimentResult

    Returns:
        格式化的报告文本
    """
    table = result.table
    report = []
    report.append("=" * 80)
    report.append("GIP传播与影响力最大化实验报告")
    report.append("=" * 80)
    report.append(f"生成时间: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    report.append("")

    report.append("【实验信息】")
    report.append(f"实验类型: {result.kind}")
    report.append(f"样本数: {result.n_replicates}")
    if result.config is not None:
        report.append(f"网络: {result.config.network.get('type', 'sbm')}")
        report.append(f"参数格子数: {len(result.config.cells)}")
    report.append(f"耗时: {result.elapsed_seconds:.2f} 秒")
    report.append("")

    report.append("【运行状态】")
    report.append(f"结果行数: {len(table)}")
    report.append(f"未收敛次数: {result.non_converged}")
    if result.connected_fraction is not None:
        report.append(f"弱连通样本比例: {result.connected_fraction:.2%}")
    report.append("")

    report.append("【指标汇总】")
    if len(table):
        overview = table.groupby('metric', sort=True)['value'].agg(['mean', 'min', 'max', 'count'])
        report.append(overview.to_string(float_format=lambda v: f"{v:.6g}"))
    else:
        report.append("无结果")
    report.append("")

    if 'accuracy' in set(table.get('metric', [])):
        report.append("【求解质量】")
        quality = table[table['metric'].isin(['accuracy', 'rank'])]
        worst = quality.groupby(['method', 'metric'])['value'].agg(['min', 'max'])
        report.append(worst.to_string(float_format=lambda v: f"{v:.6g}"))
        report.append("")

    report.append("=" * 80)

    return "\n".join(report)
