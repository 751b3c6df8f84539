"""模拟器异常定义

退出码约定:
    2 - 配置/输入校验错误
    3 - 求解器错误 (范数漂移、截断溢出、束无法分辨等)
"""
from typing import Optional


class KDError(RuntimeError):
    """Kapitza-Dirac 模拟器异常基类"""

    exit_code = 3

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict:
        """转换为机器可读的错误描述"""
        payload = {
            'error': type(self).__name__,
            'message': self.message,
            'exit_code': self.exit_code,
        }
        payload.update(self.details)
        return payload


class InputError(KDError, ValueError):
    """输入不满足前置条件"""

    exit_code = 2


class ConfigError(InputError):
    """配置文件校验失败，field 指明出错字段 (如 sequence.T_ns)"""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}", field=field)
        self.field = field


class GridTooNarrow(InputError):
    pass


class WidthNonPositive(InputError):
    pass


class FrameMismatch(InputError):
    pass


class WindowEmpty(InputError):
    pass


class NoPeaksFound(InputError):
    pass


class PopulationOutsideModel(InputError):
    pass


class TruncationOverflow(KDError):
    """阶梯截断边缘布居超出容差，需要增大 ladder_max"""
    pass


class NormDrift(KDError):
    pass


class NoConvergence(KDError):
    pass


class BeamUnresolved(KDError):
    """扫描点上 I/V 束与其他束重叠"""

    def __init__(self, message: str, param_value: Optional[float] = None):
        super().__init__(message, param_value=param_value)
        self.param_value = param_value
