"""光束-表面关联与双向增强服务"""
from collections import defaultdict
from app.models.association import Association, AssociationConfig, AssociationSummary, ObjectStats
from app.models.beam import Beam, BeamRecord
from app.services.geometry import (
    azimuth_angle_checked,
    local_frame,
    point_surface_distance,
    segment_from_ray,
    segment_surface_intersection,
    signed_distance,
    zenith_angle,
)
from app.services.hardware_optimizer import get_planner
from app.services.task_scheduler import TaskScheduler
from app.utils.errors import DataIntegrityError
from app.utils.logger import get_logger
from app.utils.statistics import describe

logger = get_logger(__name__)

# 汇总中统计的距离阈值(米)
NEAR_RANGE_15M = 15.0
NEAR_RANGE_30M = 30.0


class AssociationService:
    """关联服务类"""

    @staticmethod
    def associate_beam(beam, index, cfg=None):
        """
        关联单条光束

        候选表面经交点检验后按有向距离排序(并列时按表面ID)，确认前
        max_associations_per_beam 个。

        Args:
            beam: Beam对象
            index: SurfaceIndex
            cfg: AssociationConfig

        Returns:
            关联列表(可能为空)
        """
        cfg = cfg or AssociationConfig()
        if beam.range <= 0.0:
            return []

        geom = cfg.geom
        segment = segment_from_ray(beam.ray, geom)
        p_m = segment.center
        direction = beam.direction

        hits = []
        for surface_id in index.query_candidates(segment, geom.assoc_radius, direction):
            surface = index.get(surface_id)
            p_i = segment_surface_intersection(segment, surface, geom.epsilon)
            if p_i is None:
                continue
            hits.append((signed_distance(p_m, p_i, direction), surface.id, surface, p_i))

        if cfg.ordering == AssociationConfig.ORDERING_MIN:
            hits.sort(key=lambda hit: (hit[0], hit[1]))
        else:
            hits.sort(key=lambda hit: (-hit[0], hit[1]))

        associations = []
        for rank, (d_signed, surface_id, surface, p_i) in enumerate(hits[:cfg.max_associations_per_beam], start=1):
            frame = local_frame(surface, beam.origin, geom.epsilon)
            azimuth, degenerate = azimuth_angle_checked(p_i, frame)
            associations.append(Association(
                beam_id=beam.beam_id,
                surface_id=surface_id,
                object_id=surface.object_id,
                intersection=p_i,
                signed_dist=d_signed,
                min_dist=point_surface_distance(p_m, surface),
                zenith=zenith_angle(direction, surface.normal),
                azimuth=azimuth,
                rank=rank,
                azimuth_degenerate=degenerate,
            ))
        return associations

    @staticmethod
    def associate_batch(beams, index, cfg=None, workers=None, chunk_size=None):
        """
        批量关联

        输入可以是Beam对象或光束字典；无法解析的记录被跳过并计数。结果按
        beam_id 排序，与线程数无关。

        Args:
            beams: 光束序列
            index: SurfaceIndex
            cfg: AssociationConfig
            workers: 工作线程数
            chunk_size: 分片大小

        Returns:
            (关联列表, AssociationSummary)
        """
        cfg = cfg or AssociationConfig()
        summary = AssociationSummary()

        valid = []
        for item in beams:
            if isinstance(item, Beam):
                valid.append(item)
                continue
            try:
                valid.append(Beam.from_dict(item))
            except DataIntegrityError as e:
                summary.malformed += 1
                logger.warning(f'跳过无效光束记录: {e.message}')
        valid.sort(key=lambda beam: beam.beam_id)

        workers = TaskScheduler.resolve_workers(workers)
        chunk_size = chunk_size or get_planner().chunk_size(len(valid), workers)
        logger.info(f'开始批量关联: 光束数={len(valid)}, 表面数={len(index)}, 线程数={workers}')

        def run_chunk(chunk):
            return [AssociationService.associate_beam(beam, index, cfg) for beam in chunk]

        per_chunk = TaskScheduler.map_ordered(
            run_chunk, TaskScheduler.chunked(valid, chunk_size), workers, label='associate')

        associations = []
        for chunk, results in zip(TaskScheduler.chunked(valid, chunk_size), per_chunk):
            for beam, found in zip(chunk, results):
                summary.total += 1
                if beam.range <= 0.0:
                    summary.zero_range += 1
                if not found:
                    summary.unassociated += 1
                    continue
                summary.associated += 1
                summary.associations += len(found)
                surface = index.get(found[0].surface_id)
                summary.per_class[surface.class_name] = summary.per_class.get(surface.class_name, 0) + 1
                if beam.range <= NEAR_RANGE_15M:
                    summary.within_15m += 1
                if beam.range <= NEAR_RANGE_30M:
                    summary.within_30m += 1
                associations.extend(found)

        logger.info(f'批量关联完成: 总数={summary.total}, 已关联={summary.associated}, '
                    f'未关联={summary.unassociated}, 无效={summary.malformed}')
        return associations, summary

    @staticmethod
    def enrich_objects(associations, beams, surfaces=None):
        """
        对象级增强: 统计每个对象的关联光束

        Args:
            associations: 关联序列
            beams: 光束序列(Beam或BeamRecord)
            surfaces: 可选的 surface_id → Surface 映射, 用于附加类别信息

        Returns:
            object_id → ObjectStats 的有序字典

        Raises:
            DataIntegrityError: 关联引用了不存在的光束
        """
        by_id = {}
        for item in beams:
            beam = item.beam if isinstance(item, BeamRecord) else item
            by_id[beam.beam_id] = beam

        intensities = defaultdict(list)
        signed = defaultdict(list)
        minimum = defaultdict(list)
        labels = {}
        seen = set()
        for association in sorted(associations, key=lambda a: (a.beam_id, a.rank)):
            beam = by_id.get(association.beam_id)
            if beam is None:
                raise DataIntegrityError(f'关联引用了不存在的光束: {association.beam_id}')
            key = (association.beam_id, association.object_id)
            if key in seen:
                continue
            seen.add(key)
            intensities[association.object_id].append(beam.intensity)
            signed[association.object_id].append(association.signed_dist)
            minimum[association.object_id].append(association.min_dist)
            if surfaces is not None and association.object_id not in labels:
                surface = surfaces.get(association.surface_id)
                if surface is not None:
                    labels[association.object_id] = (surface.class_name, surface.function)

        result = {}
        for object_id in sorted(intensities):
            stats = describe(intensities[object_id])
            signed_stats = describe(signed[object_id])
            min_stats = describe(minimum[object_id])
            class_name, function = labels.get(object_id, (None, None))
            result[object_id] = ObjectStats(
                object_id=object_id,
                point_count=stats['count'],
                intensity_mean=stats['mean'],
                intensity_std=stats['std'],
                intensity_median=stats['median'],
                intensity_q1=stats['q1'],
                intensity_q3=stats['q3'],
                signed_dist_mean=signed_stats['mean'],
                signed_dist_median=signed_stats['median'],
                min_dist_mean=min_stats['mean'],
                min_dist_median=min_stats['median'],
                class_name=class_name,
                function=function,
            )
        logger.info(f'对象增强完成: 对象数={len(result)}')
        return result

    @staticmethod
    def enrich_points(associations, surfaces, beams):
        """
        点级增强: 为每条光束附加排名第一的关联表面信息

        Args:
            associations: 关联序列
            surfaces: surface_id → Surface 映射(dict, Scene 或 SurfaceIndex)
            beams: 光束序列

        Returns:
            按 beam_id 排序的 BeamRecord 列表; 未关联的光束增强字段为空

        Raises:
            DataIntegrityError: 表面ID或光束ID悬空
        """
        primary = {}
        for association in associations:
            if association.rank != 1:
                continue
            if association.beam_id in primary:
                raise DataIntegrityError(f'光束 {association.beam_id} 有多个排名第一的关联')
            primary[association.beam_id] = association

        records = []
        beam_ids = set()
        for item in sorted(beams, key=lambda b: b.beam_id):
            beam = item.beam if isinstance(item, BeamRecord) else item
            beam_ids.add(beam.beam_id)
            association = primary.get(beam.beam_id)
            if association is None:
                records.append(BeamRecord(beam))
                continue
            surface = surfaces.get(association.surface_id)
            if surface is None:
                raise DataIntegrityError(f'关联引用了不存在的表面: {association.surface_id}')
            records.append(BeamRecord(
                beam,
                surface_id=surface.id,
                object_id=surface.object_id,
                class_name=surface.class_name,
                function=surface.function,
                zenith=association.zenith,
                azimuth=association.azimuth,
                signed_dist=association.signed_dist,
                min_dist=association.min_dist,
            ))

        dangling = sorted(set(primary) - beam_ids)
        if dangling:
            raise DataIntegrityError(f'关联引用了不存在的光束: {dangling[:5]}')
        return records

    @staticmethod
    def count_object_observations(records):
        """
        统计对象观测次数

        同一采集活动中同一传感器观测到同一对象(至少一个关联点)记为一次观测。

        Args:
            records: BeamRecord 序列

        Returns:
            {'total': 观测总数, 'per_class': 类别 → 观测数, 'observations': 三元组列表}
        """
        observations = set()
        per_class = defaultdict(set)
        for record in records:
            if not record.is_associated:
                continue
            triple = (record.beam.campaign_id, record.beam.sensor_id, record.object_id)
            observations.add(triple)
            per_class[record.class_name].add(triple)
        return {
            'total': len(observations),
            'per_class': {name: len(per_class[name]) for name in sorted(per_class)},
            'observations': sorted(observations),
        }
