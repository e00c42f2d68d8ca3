"""辐射指纹提取与比较服务"""
import math
from itertools import product
import numpy as np
from app.models.fingerprint import (
    BinGrid,
    CellAccumulator,
    DistanceMatrix,
    ExtractionSummary,
    Fingerprint,
    FingerprintFilter,
    FingerprintKey,
)
from app.services.task_scheduler import TaskScheduler
from app.utils.errors import ConfigError, CoverageError, EmptyPairSetError, UnknownReferenceError
from app.utils.logger import get_logger

logger = get_logger(__name__)

# 分组方式
GROUP_BY_CLASS = 'class'
GROUP_BY_FUNCTION = 'function'
GROUP_BY_OBJECT = 'object'
GROUPINGS = (GROUP_BY_CLASS, GROUP_BY_FUNCTION, GROUP_BY_OBJECT)

# 特征矩阵可选列
FEATURE_COLUMNS = ('intensity', 'range', 'zenith', 'azimuth', 'campaign', 'sensor')

# 分箱计为已覆盖所需的最小光束数
DEFAULT_MIN_CELL_COUNT = 5

# 指纹提取的分片大小
EXTRACTION_CHUNK_SIZE = 20000


class FingerprintService:
    """指纹服务类"""

    @staticmethod
    def _fold_chunk(records, grid, record_filter):
        """把一个分片的记录累加到各指纹的分箱中"""
        summary = ExtractionSummary()
        accumulators = {}
        labels = {}
        for record in records:
            summary.input += 1
            if not record.is_associated:
                summary.dropped['unassociated'] += 1
                continue
            if record_filter.rejects(record):
                summary.dropped['filtered'] += 1
                continue
            range_bin = int(grid.range_bin_of(record.beam.range))
            zenith_bin = int(grid.zenith_bin_of(record.zenith))
            if range_bin < 0 or zenith_bin < 0:
                summary.dropped['outside_grid'] += 1
                continue
            key = FingerprintKey(record.beam.campaign_id, record.beam.sensor_id, record.object_id)
            if key not in accumulators:
                accumulators[key] = CellAccumulator(grid)
                labels[key] = (record.class_name, record.function)
            accumulators[key].add(range_bin, zenith_bin, record.beam.intensity)
            summary.counted += 1
        return accumulators, labels, summary

    @staticmethod
    def extract_fingerprints(records, grid=None, record_filter=None, workers=None,
                             chunk_size=EXTRACTION_CHUNK_SIZE):
        """
        提取指纹

        每条已关联且通过过滤的光束恰好计入一个指纹的一个分箱；其余光束按原因计入丢弃数。

        Args:
            records: BeamRecord 序列
            grid: BinGrid, 默认网格
            record_filter: FingerprintFilter
            workers: 工作线程数
            chunk_size: 分片大小

        Returns:
            (FingerprintKey → Fingerprint 的有序字典, ExtractionSummary)
        """
        grid = grid or BinGrid.default()
        record_filter = record_filter or FingerprintFilter()
        records = sorted(records, key=lambda r: r.beam_id)
        logger.info(f'开始提取指纹: 记录数={len(records)}')

        partials = TaskScheduler.map_ordered(
            lambda chunk: FingerprintService._fold_chunk(chunk, grid, record_filter),
            TaskScheduler.chunked(records, chunk_size),
            workers,
            label='fingerprint',
        )

        merged = {}
        labels = {}
        summary = ExtractionSummary()
        for accumulators, chunk_labels, chunk_summary in partials:
            summary.merge(chunk_summary)
            for key, accumulator in accumulators.items():
                if key in merged:
                    merged[key].merge(accumulator)
                else:
                    merged[key] = accumulator
                    labels[key] = chunk_labels[key]

        fingerprints = {}
        for key in sorted(merged):
            class_name, function = labels[key]
            fingerprints[key] = Fingerprint(key, grid, merged[key].finalize(), class_name, function)

        logger.info(f'指纹提取完成: 指纹数={len(fingerprints)}, 计入={summary.counted}, '
                    f'丢弃={summary.dropped}')
        return fingerprints, summary

    @staticmethod
    def dist_q3(a, b, range_bin=0, min_count=DEFAULT_MIN_CELL_COUNT):
        """
        两个指纹在指定距离分箱上Q3值的均方根距离

        Args:
            a, b: Fingerprint
            range_bin: 距离分箱下标
            min_count: 分箱计为已覆盖的最小光束数

        Returns:
            距离(≥0)

        Raises:
            CoverageError: 任一指纹在该距离分箱上覆盖不完整
        """
        if a.grid != b.grid:
            raise ConfigError('两个指纹的分箱网格不一致')
        missing = []
        for fingerprint in (a, b):
            for j in fingerprint.missing_bins(range_bin, min_count):
                missing.append(f'{fingerprint.key.label()}[range={range_bin},zenith={j}]')
        if missing:
            raise CoverageError(f'指纹覆盖不完整: {", ".join(missing)}', missing=missing)

        q_a = np.array(a.q3_profile(range_bin), dtype=np.float64)
        q_b = np.array(b.q3_profile(range_bin), dtype=np.float64)
        return float(math.sqrt(np.mean((q_a - q_b) ** 2)))

    @staticmethod
    def mean_group_distance(group_a, group_b, fingerprints, range_bin=0, min_count=DEFAULT_MIN_CELL_COUNT):
        """
        两组指纹之间的平均Q3距离, 只计入对象不同的指纹对

        Raises:
            EmptyPairSetError: 没有可用的指纹对
            UnknownReferenceError: 指纹键不存在
        """
        for key in list(group_a) + list(group_b):
            if key not in fingerprints:
                raise UnknownReferenceError(f'指纹不存在: {key.label()}')
        pairs = [(x, y) for x, y in product(sorted(group_a), sorted(group_b)) if x.object_id != y.object_id]
        if not pairs:
            raise EmptyPairSetError('分组之间没有对象不同的指纹对')
        total = 0.0
        for x, y in pairs:
            total += FingerprintService.dist_q3(fingerprints[x], fingerprints[y], range_bin, min_count)
        return total / len(pairs)

    @staticmethod
    def _group_label(fingerprint, grouping):
        if grouping == GROUP_BY_CLASS:
            return fingerprint.class_name
        if grouping == GROUP_BY_FUNCTION:
            return fingerprint.function
        return fingerprint.key.label()

    @staticmethod
    def group_distance_matrix(fingerprints, grouping=GROUP_BY_CLASS, range_bin=0, min_count=DEFAULT_MIN_CELL_COUNT):
        """
        分组平均距离矩阵

        只使用在该距离分箱上完全覆盖的指纹。按类别或功能分组时，项 (g, g') 为
        mean_group_distance，没有可用指纹对的项为None；按对象分组时，项为两个指纹
        之间的 dist_q3。

        Returns:
            DistanceMatrix
        """
        if grouping not in GROUPINGS:
            raise ConfigError(f'未知的分组方式: {grouping!r}, 可选 {", ".join(GROUPINGS)}')

        covered = {key: fp for key, fp in fingerprints.items() if fp.is_covered(range_bin, min_count)}
        groups = {}
        for key in sorted(covered):
            label = FingerprintService._group_label(covered[key], grouping)
            if label is None:
                continue
            groups.setdefault(label, []).append(key)
        labels = sorted(groups)
        logger.info(f'计算距离矩阵: 分组={grouping}, 覆盖指纹数={len(covered)}/{len(fingerprints)}, '
                    f'组数={len(labels)}')

        size = len(labels)
        values = [[None] * size for _ in range(size)]
        for i in range(size):
            for j in range(i, size):
                if grouping == GROUP_BY_OBJECT:
                    a = covered[groups[labels[i]][0]]
                    b = covered[groups[labels[j]][0]]
                    value = FingerprintService.dist_q3(a, b, range_bin, min_count)
                else:
                    try:
                        value = FingerprintService.mean_group_distance(
                            groups[labels[i]], groups[labels[j]], covered, range_bin, min_count)
                    except EmptyPairSetError:
                        value = None
                values[i][j] = value
                values[j][i] = value

        group_sizes = {label: len(groups[label]) for label in labels}
        return DistanceMatrix(labels, values, grouping, range_bin, group_sizes)

    @staticmethod
    def export_feature_matrix(records, columns=FEATURE_COLUMNS):
        """
        导出特征矩阵

        第一列恒为 beam_id；sensor 列展开为每个传感器一列的独热编码；未关联光束的
        zenith/azimuth 为None。

        Args:
            records: BeamRecord 序列
            columns: 选用的列

        Returns:
            (表头列表, 按 beam_id 排序的行列表)

        Raises:
            ConfigError: 未知列名
        """
        columns = list(columns)
        unknown = [c for c in columns if c not in FEATURE_COLUMNS]
        if unknown:
            raise ConfigError(f'未知的特征列: {", ".join(unknown)}, 可选 {", ".join(FEATURE_COLUMNS)}')

        records = sorted(records, key=lambda r: r.beam_id)
        sensors = sorted({r.beam.sensor_id for r in records})

        header = ['beam_id']
        for column in columns:
            if column == 'sensor':
                header.extend(f'sensor={sensor}' for sensor in sensors)
            else:
                header.append(column)

        rows = []
        for record in records:
            beam = record.beam
            row = [beam.beam_id]
            for column in columns:
                if column == 'intensity':
                    row.append(beam.intensity)
                elif column == 'range':
                    row.append(beam.range)
                elif column == 'zenith':
                    row.append(record.zenith)
                elif column == 'azimuth':
                    row.append(record.azimuth)
                elif column == 'campaign':
                    row.append(beam.campaign_id)
                else:
                    row.extend(1 if beam.sensor_id == sensor else 0 for sensor in sensors)
            rows.append(row)
        return header, rows
