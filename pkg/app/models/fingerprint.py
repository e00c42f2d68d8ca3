"""辐射指纹模型"""
import math
from typing import NamedTuple
import numpy as np
from app.utils.errors import ConfigError
from app.utils.statistics import ValueAccumulator

HALF_PI = math.pi / 2.0


class BinGrid:
    """
    距离 × 天顶角 分箱网格

    区间均为左闭右开 [e_i, e_{i+1})；方位角不分箱。
    """

    def __init__(self, range_edges, zenith_edges):
        self.range_edges = np.array(range_edges, dtype=np.float64)
        self.zenith_edges = np.array(zenith_edges, dtype=np.float64)
        self.validate()

    def validate(self):
        for name, edges in (('range_edges', self.range_edges), ('zenith_edges', self.zenith_edges)):
            if edges.ndim != 1 or edges.size < 2:
                raise ConfigError(f'{name} 至少需要两个边界')
            if not np.all(np.isfinite(edges)):
                raise ConfigError(f'{name} 包含非有限值')
            if not np.all(np.diff(edges) > 0):
                raise ConfigError(f'{name} 必须严格递增: {edges.tolist()}')
        if self.range_edges[0] < 0:
            raise ConfigError(f'距离分箱起点不能为负: {self.range_edges[0]}')
        if self.zenith_edges[0] < 0 or self.zenith_edges[-1] > HALF_PI + 1e-12:
            raise ConfigError('天顶角分箱必须位于 [0, π/2]')

    @classmethod
    def default(cls):
        """默认网格: 距离 [0, 15) m, 天顶角 0/20/40/60/90 度"""
        return cls.from_settings(15.0, 15.0, (0.0, 20.0, 40.0, 60.0, 90.0))

    @classmethod
    def from_settings(cls, range_bin_size, range_max, zenith_bins_deg):
        """
        由分箱宽度、最大距离和天顶角边界(度)构造网格

        最大距离不是分箱宽度的整数倍时，最后一个分箱截止于最大距离。
        """
        range_bin_size = float(range_bin_size)
        range_max = float(range_max)
        if not range_bin_size > 0 or not range_max > 0:
            raise ConfigError(f'距离分箱宽度和最大距离必须为正: {range_bin_size}, {range_max}')
        count = int(math.floor(range_max / range_bin_size + 1e-9))
        edges = [i * range_bin_size for i in range(count + 1)]
        if range_max - edges[-1] > 1e-9:
            edges.append(range_max)
        else:
            edges[-1] = range_max
        zenith = [math.radians(float(z)) for z in zenith_bins_deg]
        if zenith and abs(float(zenith_bins_deg[-1]) - 90.0) < 1e-12:
            zenith[-1] = HALF_PI
        return cls(edges, zenith)

    @property
    def range_bin_count(self):
        return self.range_edges.size - 1

    @property
    def zenith_bin_count(self):
        return self.zenith_edges.size - 1

    @staticmethod
    def _locate(edges, values):
        values = np.asarray(values, dtype=np.float64)
        index = np.searchsorted(edges, values, side='right') - 1
        outside = (values < edges[0]) | (values >= edges[-1]) | ~np.isfinite(values)
        return np.where(outside, -1, index)

    def range_bin_of(self, values):
        """距离所在分箱下标, 超出网格为 -1"""
        return self._locate(self.range_edges, values)

    def zenith_bin_of(self, values):
        """天顶角所在分箱下标, 超出网格为 -1"""
        return self._locate(self.zenith_edges, values)

    def zenith_labels(self):
        """天顶角分箱的文字标签, 如 [0°, 20°)"""
        degrees = [math.degrees(z) for z in self.zenith_edges]
        return [f'[{degrees[j]:g}°, {degrees[j + 1]:g}°)' for j in range(self.zenith_bin_count)]

    def range_labels(self):
        edges = self.range_edges
        return [f'[{edges[i]:g}m, {edges[i + 1]:g}m)' for i in range(self.range_bin_count)]

    def __eq__(self, other):
        return (isinstance(other, BinGrid)
                and np.array_equal(self.range_edges, other.range_edges)
                and np.array_equal(self.zenith_edges, other.zenith_edges))

    __hash__ = None

    def to_dict(self):
        return {
            'range_edges': self.range_edges.tolist(),
            'zenith_edges_deg': [math.degrees(z) for z in self.zenith_edges],
        }


class FingerprintKey(NamedTuple):
    """指纹键: (采集活动, 传感器, 对象)"""

    campaign_id: str
    sensor_id: str
    object_id: str

    def label(self):
        return f'{self.campaign_id}/{self.sensor_id}/{self.object_id}'


class CellStats:
    """单个分箱的强度描述量"""

    def __init__(self, count=0, mean=None, std=None, median=None, q1=None, q3=None):
        self.count = count
        self.mean = mean
        self.std = std
        self.median = median
        self.q1 = q1
        self.q3 = q3

    def to_dict(self):
        return {
            'count': self.count,
            'mean': self.mean,
            'std': self.std,
            'median': self.median,
            'q1': self.q1,
            'q3': self.q3,
        }

    def __eq__(self, other):
        return isinstance(other, CellStats) and self.to_dict() == other.to_dict()

    __hash__ = None


class CellAccumulator:
    """一个指纹的分箱累加器, 合并满足交换律和结合律"""

    def __init__(self, grid):
        self.grid = grid
        self.cells = [[ValueAccumulator() for _ in range(grid.zenith_bin_count)]
                      for _ in range(grid.range_bin_count)]

    def add(self, range_bin, zenith_bin, value):
        self.cells[range_bin][zenith_bin].add(value)

    def merge(self, other):
        for row, other_row in zip(self.cells, other.cells):
            for cell, other_cell in zip(row, other_row):
                cell.merge(other_cell)
        return self

    def finalize(self):
        return [[CellStats(**cell.describe()) for cell in row] for row in self.cells]


class Fingerprint:
    """一个 (采集活动, 传感器, 对象) 的辐射指纹"""

    def __init__(self, key, grid, cells, class_name=None, function=None):
        self.key = key
        self.grid = grid
        self.cells = cells
        self.class_name = class_name
        self.function = function

    def q3_profile(self, range_bin):
        """指定距离分箱上各天顶角分箱的Q3"""
        return [cell.q3 for cell in self.cells[range_bin]]

    def missing_bins(self, range_bin, min_count=1):
        """数量不足 min_count 的天顶角分箱下标"""
        if not 0 <= range_bin < self.grid.range_bin_count:
            raise ConfigError(f'距离分箱下标越界: {range_bin}')
        return [j for j, cell in enumerate(self.cells[range_bin]) if cell.count < max(1, min_count)]

    def is_covered(self, range_bin, min_count=1):
        return not self.missing_bins(range_bin, min_count)

    @property
    def total_count(self):
        return sum(cell.count for row in self.cells for cell in row)

    def to_dict(self):
        return {
            'key': self.key._asdict(),
            'class_name': self.class_name,
            'function': self.function,
            'grid': self.grid.to_dict(),
            'cells': [[cell.to_dict() for cell in row] for row in self.cells],
        }


class FingerprintFilter:
    """指纹提取过滤条件"""

    SELECTORS = ('campaigns', 'sensors', 'objects', 'classes', 'functions')

    def __init__(self, campaigns=None, sensors=None, objects=None, classes=None, functions=None,
                 range_window=(0.0, 15.0), zenith_window=(0.0, HALF_PI)):
        self.campaigns = self._as_set(campaigns)
        self.sensors = self._as_set(sensors)
        self.objects = self._as_set(objects)
        self.classes = self._as_set(classes)
        self.functions = self._as_set(functions)
        self.range_window = tuple(float(x) for x in range_window)
        self.zenith_window = tuple(float(x) for x in zenith_window)
        self.validate()

    @staticmethod
    def _as_set(values):
        if values is None:
            return None
        return frozenset(str(v) for v in values)

    def validate(self):
        for name in self.SELECTORS:
            values = getattr(self, name)
            if values is not None and not values:
                raise ConfigError(f'过滤条件 {name} 为空集合, 不会选中任何光束')
        for name, window in (('range_window', self.range_window), ('zenith_window', self.zenith_window)):
            if len(window) != 2 or not window[0] < window[1]:
                raise ConfigError(f'{name} 必须满足 下界 < 上界: {window}')

    def rejects(self, record):
        """记录不满足过滤条件时返回True"""
        beam = record.beam
        if self.campaigns is not None and beam.campaign_id not in self.campaigns:
            return True
        if self.sensors is not None and beam.sensor_id not in self.sensors:
            return True
        if self.objects is not None and record.object_id not in self.objects:
            return True
        if self.classes is not None and record.class_name not in self.classes:
            return True
        if self.functions is not None and record.function not in self.functions:
            return True
        if not self.range_window[0] <= beam.range < self.range_window[1]:
            return True
        if not self.zenith_window[0] <= record.zenith < self.zenith_window[1]:
            return True
        return False

    def to_dict(self):
        data = {name: sorted(getattr(self, name)) if getattr(self, name) is not None else None
                for name in self.SELECTORS}
        data['range_window'] = list(self.range_window)
        data['zenith_window_deg'] = [math.degrees(z) for z in self.zenith_window]
        return data


class ExtractionSummary:
    """指纹提取计数: 计入数量和按原因分类的丢弃数量"""

    REASONS = ('unassociated', 'filtered', 'outside_grid')

    def __init__(self):
        self.input = 0
        self.counted = 0
        self.dropped = {reason: 0 for reason in self.REASONS}

    def merge(self, other):
        self.input += other.input
        self.counted += other.counted
        for reason in self.REASONS:
            self.dropped[reason] += other.dropped[reason]
        return self

    def to_dict(self):
        return {'input': self.input, 'counted': self.counted, 'dropped': dict(self.dropped)}


class DistanceMatrix:
    """带标签的对称距离矩阵, 缺失项为None"""

    def __init__(self, labels, values, grouping, range_bin, group_sizes=None):
        self.labels = list(labels)
        self.values = values
        self.grouping = grouping
        self.range_bin = range_bin
        self.group_sizes = group_sizes or {}

    def to_dict(self):
        return {
            'grouping': self.grouping,
            'range_bin': self.range_bin,
            'labels': self.labels,
            'values': self.values,
            'group_sizes': self.group_sizes,
        }
