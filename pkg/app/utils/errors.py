"""业务异常定义

每个异常携带稳定的错误码和命令行退出码，命令层据此输出单行错误信息。
"""


class BeamSurfaceError(Exception):
    """所有业务异常的基类"""

    code = 'internal'
    exit_code = 1

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_line(self):
        """
        生成机器可解析的单行错误描述

        Returns:
            形如 ``ERROR code=coverage exit=4 message=...`` 的字符串
        """
        message = ' '.join(str(self.message).split())
        return f'ERROR code={self.code} exit={self.exit_code} message={message}'


class ConfigError(BeamSurfaceError):
    """配置无效"""

    code = 'invalid_config'
    exit_code = 2


class MissingInputError(BeamSurfaceError):
    """输入文件或目录不存在"""

    code = 'missing_input'
    exit_code = 3


class CoverageError(BeamSurfaceError):
    """指纹在所需天顶角区间上覆盖不完整"""

    code = 'coverage'
    exit_code = 4

    def __init__(self, message, missing=None):
        super().__init__(message, missing=missing or [])
        self.missing = list(missing or [])


class EmptyPairSetError(BeamSurfaceError):
    """分组距离没有可用的对象对"""

    code = 'empty_pairs'
    exit_code = 5


class StoreBusyError(BeamSurfaceError):
    """存储目录已被其他写入进程锁定"""

    code = 'store_busy'
    exit_code = 6


class DataIntegrityError(BeamSurfaceError):
    """输入数据损坏或引用不一致"""

    code = 'corrupt_input'
    exit_code = 7


class DuplicateIdError(DataIntegrityError):
    """标识重复"""

    def __init__(self, message, duplicate_id=None):
        super().__init__(message, duplicate_id=duplicate_id)
        self.duplicate_id = duplicate_id


class UnknownReferenceError(DataIntegrityError):
    """引用了未注册的平台、传感器、活动或表面"""


class GeometryError(DataIntegrityError):
    """几何数据不满足约束"""


class SingularConfigurationError(BeamSurfaceError):
    """点云几何退化，无法求解刚体变换"""

    code = 'singular_configuration'
    exit_code = 8
