"""光束模型"""
import math
import numpy as np
from app.models.geometry import Ray
from app.utils.errors import DataIntegrityError, GeometryError

# beam_id 取值上限(无符号64位)
MAX_BEAM_ID = 2 ** 64 - 1

# 强度取值范围
INTENSITY_MIN = 0.0
INTENSITY_MAX = 255.0


def quantize_intensity(value):
    """强度按float32量化, 保证存储往返一致"""
    return float(np.float32(value))


class Beam:
    """一次发射并返回的激光脉冲"""

    def __init__(self, beam_id, origin, direction, range, intensity, timestamp_ns, sensor_id, campaign_id):
        try:
            beam_id = int(beam_id)
        except (TypeError, ValueError) as e:
            raise DataIntegrityError(f'beam_id 无效: {beam_id!r}') from e
        if not 0 <= beam_id <= MAX_BEAM_ID:
            raise DataIntegrityError(f'beam_id 超出范围: {beam_id}')
        if not sensor_id or not campaign_id:
            raise DataIntegrityError(f'光束 {beam_id} 缺少传感器或采集活动ID')

        try:
            self.ray = Ray(origin, direction, range)
        except GeometryError as e:
            raise DataIntegrityError(f'光束 {beam_id} 几何无效: {e.message}') from e

        intensity = float(intensity)
        if not math.isfinite(intensity) or not INTENSITY_MIN <= intensity <= INTENSITY_MAX:
            raise DataIntegrityError(f'光束 {beam_id} 强度超出[0, 255]: {intensity!r}')

        self.beam_id = beam_id
        self.intensity = quantize_intensity(intensity)
        self.timestamp_ns = int(timestamp_ns)
        self.sensor_id = str(sensor_id)
        self.campaign_id = str(campaign_id)

    @property
    def origin(self):
        return self.ray.origin

    @property
    def direction(self):
        return self.ray.direction

    @property
    def range(self):
        return self.ray.range

    def reflection_point(self):
        return self.ray.origin + self.ray.range * self.ray.direction

    def to_dict(self):
        return {
            'beam_id': self.beam_id,
            'origin': self.origin.tolist(),
            'direction': self.direction.tolist(),
            'range': self.range,
            'intensity': self.intensity,
            'timestamp_ns': self.timestamp_ns,
            'sensor_id': self.sensor_id,
            'campaign_id': self.campaign_id,
        }

    @classmethod
    def from_dict(cls, data):
        """
        从字典构造光束, 缺字段或值无效时抛出DataIntegrityError

        Args:
            data: 包含 beam_id, origin/direction 或 ox..dz, range, intensity,
                  timestamp_ns, sensor_id, campaign_id 的字典
        """
        try:
            if 'origin' in data:
                origin, direction = data['origin'], data['direction']
            else:
                origin = (float(data['ox']), float(data['oy']), float(data['oz']))
                direction = (float(data['dx']), float(data['dy']), float(data['dz']))
            return cls(
                beam_id=data['beam_id'],
                origin=origin,
                direction=direction,
                range=float(data['range']),
                intensity=float(data['intensity']),
                timestamp_ns=int(data['timestamp_ns']),
                sensor_id=data['sensor_id'],
                campaign_id=data['campaign_id'],
            )
        except (KeyError, TypeError, ValueError) as e:
            raise DataIntegrityError(f'光束记录无效: {e}') from e

    def __eq__(self, other):
        return (isinstance(other, Beam)
                and self.beam_id == other.beam_id
                and np.array_equal(self.origin, other.origin)
                and np.array_equal(self.direction, other.direction)
                and self.range == other.range
                and self.intensity == other.intensity
                and self.timestamp_ns == other.timestamp_ns
                and self.sensor_id == other.sensor_id
                and self.campaign_id == other.campaign_id)

    __hash__ = None

    def __repr__(self):
        return f'Beam({self.beam_id}, range={self.range}, intensity={self.intensity})'


class BeamRecord:
    """
    光束记录: 光束字段加关联列

    关联列要么全部存在要么全部缺失(function 为可选标签)。
    """

    ASSOCIATION_FIELDS = ('surface_id', 'object_id', 'class_name', 'zenith', 'azimuth', 'signed_dist', 'min_dist')

    def __init__(self, beam, surface_id=None, object_id=None, class_name=None, function=None,
                 zenith=None, azimuth=None, signed_dist=None, min_dist=None):
        self.beam = beam
        self.surface_id = surface_id
        self.object_id = object_id
        self.class_name = class_name
        self.function = function
        self.zenith = zenith
        self.azimuth = azimuth
        self.signed_dist = signed_dist
        self.min_dist = min_dist

        present = [getattr(self, name) is not None for name in self.ASSOCIATION_FIELDS]
        if any(present) and not all(present):
            raise DataIntegrityError(f'光束 {beam.beam_id} 的关联列不完整')
        if not any(present) and function is not None:
            raise DataIntegrityError(f'光束 {beam.beam_id} 未关联却带有功能标签')

    @property
    def is_associated(self):
        return self.surface_id is not None

    @property
    def beam_id(self):
        return self.beam.beam_id

    def enrichment(self):
        return {
            'surface_id': self.surface_id,
            'object_id': self.object_id,
            'class_name': self.class_name,
            'function': self.function,
            'zenith': self.zenith,
            'azimuth': self.azimuth,
            'signed_dist': self.signed_dist,
            'min_dist': self.min_dist,
        }

    def to_dict(self):
        data = self.beam.to_dict()
        data.update(self.enrichment())
        return data

    def __eq__(self, other):
        return (isinstance(other, BeamRecord)
                and self.beam == other.beam
                and self.enrichment() == other.enrichment())

    __hash__ = None

    def __repr__(self):
        return f'BeamRecord({self.beam_id}, surface={self.surface_id!r})'

