"""强度统计工具

对象统计和指纹单元统计共用同一套描述量计算，分位数采用排序后相邻秩之间的线性插值。
"""
import math
import numpy as np


def quantile(sorted_values, q):
    """
    计算已排序序列的分位数(线性插值)

    Args:
        sorted_values: 升序排列的数值序列
        q: 分位点, 取值 [0, 1]

    Returns:
        分位数值
    """
    n = len(sorted_values)
    if n == 0:
        raise ValueError('空序列没有分位数')
    position = (n - 1) * q
    lower = int(math.floor(position))
    upper = min(lower + 1, n - 1)
    fraction = position - lower
    low_value = float(sorted_values[lower])
    high_value = float(sorted_values[upper])
    return low_value + (high_value - low_value) * fraction


def describe(values):
    """
    计算一组数值的描述统计量

    Args:
        values: 数值序列

    Returns:
        字典 {count, mean, std, median, q1, q3}; 空序列时统计量为None
    """
    array = np.asarray(values, dtype=np.float64)
    count = int(array.size)
    if count == 0:
        return {'count': 0, 'mean': None, 'std': None, 'median': None, 'q1': None, 'q3': None}

    ordered = np.sort(array)
    # 样本标准差(n-1)；单个值时记为0
    std = float(np.std(ordered, ddof=1)) if count > 1 else 0.0
    return {
        'count': count,
        'mean': float(np.mean(ordered)),
        'std': std,
        'median': quantile(ordered, 0.5),
        'q1': quantile(ordered, 0.25),
        'q3': quantile(ordered, 0.75),
    }


class ValueAccumulator:
    """可合并的数值累加器

    并行折叠时各分片分别累加，合并只拼接原始值，描述量在全部合并后统一计算，
    因此结果与分片方式无关。
    """

    def __init__(self):
        self._buffer = []

    @property
    def count(self):
        return len(self._buffer)

    def add(self, value):
        self._buffer.append(float(value))

    def extend(self, values):
        self._buffer.extend(np.asarray(values, dtype=np.float64).ravel().tolist())

    def merge(self, other):
        """合并另一个累加器(满足交换律和结合律)"""
        self._buffer.extend(other._buffer)
        return self

    def values(self):
        """全部值的升序数组, 只在此处转换为numpy数组"""
        return np.sort(np.asarray(self._buffer, dtype=np.float64))

    def describe(self):
        return describe(self.values())
