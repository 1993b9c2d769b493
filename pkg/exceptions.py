"""
异常定义模块
GIP传播模型与影响力最大化求解器使用的错误类型
"""


class GipError(Exception):
    """所有GIP相关错误的基类"""


class EdgeListFormatError(GipError, ValueError):
    """边列表文件格式错误"""

    def __init__(self, message: str, line_number: int = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"第 {line_number} 行: {message}"
        super().__init__(message)


class GraphValidationError(GipError, ValueError):
    """图结构不合法(节点越界, 非正权重, 重复边)"""


class OddDegreeError(GipError, ValueError):
    """环形格子网络的度数必须为偶数"""


class EmptyGraphError(GipError, ValueError):
    """图中没有边或没有节点"""


class KTooLargeError(GipError, ValueError):
    """预算k不在 [1, n] 范围内"""


class NonConvergentError(GipError, RuntimeError):
    """迭代在最大步数内未收敛"""


class DivergentSeriesError(GipError, ArithmeticError):
    """级数发散: factor * rho(W) >= 1"""


class HorizonExceededError(GipError, ValueError):
    """请求的时间步超出可记录的轨迹长度"""


class CombinatorialBlowupError(GipError, RuntimeError):
    """穷举的组合数超过上限"""


class DegenerateOptimumError(GipError, ArithmeticError):
    """全局最优值为0, 但给定解的目标值为正"""


class ConfigError(GipError, ValueError):
    """实验配置或命令行参数不合法"""
