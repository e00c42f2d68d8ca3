"""硬件配置检测和批处理参数规划模块

根据当前运行环境的CPU核心数和可用内存，确定默认的工作线程数和分片大小。
"""

import os
import platform
import psutil
from app.utils.logger import get_logger

logger = get_logger(__name__)


class HardwareInfo:
    """硬件信息类"""

    def __init__(self):
        """检测当前系统的硬件信息"""
        self.system = platform.system()
        self.machine = platform.machine()

        # CPU信息
        self.cpu_count = os.cpu_count() or 1
        self.cpu_count_physical = psutil.cpu_count(logical=False) or self.cpu_count

        # 进程可用的核心数(受CPU亲和性限制)
        try:
            self.cpu_available = len(psutil.Process().cpu_affinity()) or self.cpu_count
        except (AttributeError, NotImplementedError, psutil.Error):
            self.cpu_available = self.cpu_count

        # 内存信息
        memory = psutil.virtual_memory()
        self.memory_total_gb = memory.total / (1024 ** 3)
        self.memory_available_gb = memory.available / (1024 ** 3)

        self._log_hardware_info()

    def _log_hardware_info(self):
        """记录硬件信息到日志"""
        logger.debug(f"系统信息: {self.system} {self.machine}")
        logger.debug(f"CPU: {self.cpu_count} 逻辑核心, {self.cpu_count_physical} 物理核心, 可用 {self.cpu_available}")
        logger.debug(f"内存: {self.memory_total_gb:.2f}GB 总量, {self.memory_available_gb:.2f}GB 可用")


class WorkerPlanner:
    """批处理并行度规划器"""

    # 每条光束在内存中的估算字节数(对象、数组和中间结果)
    BYTES_PER_BEAM = 2048

    # 分片占用可用内存的比例上限
    MEMORY_FRACTION = 0.25

    def __init__(self, max_workers=None, base_chunk_size=None):
        from config import DefaultConfig
        self.max_workers = max_workers or DefaultConfig.MAX_WORKER_COUNT
        self.base_chunk_size = base_chunk_size or DefaultConfig.BATCH_CHUNK_SIZE
        try:
            self.hardware = HardwareInfo()
        except Exception as e:
            logger.error(f"硬件检测失败: {str(e)}", exc_info=True)
            self.hardware = None

    def default_workers(self) -> int:
        """默认工作线程数: 可用核心数, 不超过配置上限"""
        if self.hardware is None:
            return 1
        return max(1, min(self.hardware.cpu_available, self.max_workers))

    def chunk_size(self, total_items: int, workers: int = None) -> int:
        """
        计算分片大小

        分片数至少为线程数的4倍以均衡负载，同时单个分片不超过可用内存的限定比例。

        Args:
            total_items: 总元素数
            workers: 工作线程数

        Returns:
            分片大小(≥1)
        """
        workers = workers or self.default_workers()
        size = self.base_chunk_size
        if total_items > 0:
            size = min(size, max(1, -(-total_items // (workers * 4))))
        if self.hardware is not None:
            memory_bytes = self.hardware.memory_available_gb * (1024 ** 3) * self.MEMORY_FRACTION
            memory_limit = int(memory_bytes / (self.BYTES_PER_BEAM * max(1, workers)))
            size = min(size, max(1, memory_limit))
        return max(1, int(size))


# 全局规划器实例
_global_planner = None


def get_planner() -> WorkerPlanner:
    """获取全局规划器实例"""
    global _global_planner
    if _global_planner is None:
        _global_planner = WorkerPlanner()
    return _global_planner
