"""任务调度服务

批处理任务被切分成若干分片，在线程池中执行，结果按提交顺序返回，
因此输出与工作线程数无关。
"""
from concurrent.futures import ThreadPoolExecutor
from app.utils.logger import get_logger

logger = get_logger(__name__)


class TaskScheduler:
    """任务调度服务类"""

    @staticmethod
    def chunked(items, chunk_size):
        """
        按固定大小切分序列

        Args:
            items: 序列
            chunk_size: 分片大小(≥1)

        Returns:
            分片列表
        """
        chunk_size = max(1, int(chunk_size))
        return [items[i:i + chunk_size] for i in range(0, len(items), chunk_size)]

    @staticmethod
    def resolve_workers(workers=None):
        """解析工作线程数, 未指定时由硬件规划器给出"""
        if workers is None:
            from app.services.hardware_optimizer import get_planner
            return get_planner().default_workers()
        return max(1, int(workers))

    @staticmethod
    def map_ordered(func, items, workers=None, label='batch'):
        """
        并行执行并按输入顺序返回结果

        Args:
            func: 处理单个元素的函数
            items: 元素列表
            workers: 工作线程数, None 表示自动
            label: 日志中的任务名称

        Returns:
            与items一一对应的结果列表
        """
        items = list(items)
        workers = TaskScheduler.resolve_workers(workers)

        try:
            logger.debug(f'任务开始: {label}, 分片数={len(items)}, 线程数={workers}')
            if workers == 1 or len(items) <= 1:
                results = [func(item) for item in items]
            else:
                with ThreadPoolExecutor(max_workers=min(workers, len(items)),
                                        thread_name_prefix=label) as executor:
                    results = list(executor.map(func, items))
            logger.debug(f'任务完成: {label}, 分片数={len(items)}')
            return results
        except Exception as e:
            logger.error(f'任务执行失败: {label}: {str(e)}', exc_info=True)
            raise
