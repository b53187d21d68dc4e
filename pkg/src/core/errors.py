"""
求解器异常体系

所有可预期的失败都派生自 SolverError，并携带命令行退出码：
  2 - 初值不满足可解性条件
  3 - 迭代不收敛 / 窗口调度停滞
  4 - 不变量破坏（符号、双曲性、梯度爆破）
  5 - 配置错误
"""

from typing import Optional


class SolverError(Exception):
    """求解器错误基类"""

    exit_code: int = 1

    def __init__(self, message: str, *, window: Optional[int] = None,
                 t: Optional[float] = None, node: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.window = window
        self.t = t
        self.node = node

    def annotate(self, *, window: Optional[int] = None, t: Optional[float] = None,
                 node: Optional[int] = None) -> "SolverError":
        """补充出错位置（已有的位置信息不会被覆盖）"""
        if self.window is None:
            self.window = window
        if self.t is None:
            self.t = t
        if self.node is None:
            self.node = node
        return self

    def __str__(self) -> str:
        where = []
        if self.window is not None:
            where.append(f"window={self.window}")
        if self.t is not None:
            where.append(f"T={self.t:.6g}")
        if self.node is not None:
            where.append(f"node={self.node}")
        if where:
            return f"{self.message} [{', '.join(where)}]"
        return self.message


class ConfigError(SolverError):
    exit_code = 5


class WindowConstraintError(SolverError):
    """窗口长度超过局部存在性约束"""
    exit_code = 5


class AdmissibilityError(SolverError):
    exit_code = 2


class ConvergenceError(SolverError):
    exit_code = 3


class ScheduleStallError(SolverError):
    """窗口长度下溢，无法到达 t_final"""
    exit_code = 3


class InvariantViolationError(SolverError):
    exit_code = 4


class HyperbolicityLossError(InvariantViolationError):
    """h + η 不再为正"""


class OrderingError(InvariantViolationError):
    """z₊ < z₋"""


class EvaluationError(InvariantViolationError):
    """特征坐标出现非有限值"""


class GradientBlowUpError(InvariantViolationError):
    """梯度爆破（波破碎的离散表现）"""


class JacobianCollapseError(GradientBlowUpError):
    """ξ ≤ 0"""


class BallEscapeError(GradientBlowUpError):
    """导数迭代逃出先验球"""


class DomainError(SolverError, ValueError):
    """C_φ = 0 时窗口长度无定义"""
    exit_code = 5


class OracleError(SolverError):
    """参考解失败"""
    exit_code = 4


class NoRootError(OracleError):
    pass


class CflError(OracleError):
    pass


class SpeedSignError(OracleError):
    pass


class BlowUpError(OracleError):
    """Riccati 解爆破"""

    def __init__(self, message: str, time: float, **kwargs):
        super().__init__(message, **kwargs)
        self.time = time
