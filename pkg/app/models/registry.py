"""传感器数据库登记模型: 平台、传感器、采集活动、数据包"""
import numpy as np
from app.models.geometry import Aabb
from app.models.point_cloud import RigidTransform
from app.utils.errors import DataIntegrityError


def _require_id(value, label):
    if value is None or str(value) == '':
        raise DataIntegrityError(f'{label} 不能为空')
    return str(value)


class Platform:
    """传感器平台(车辆、无人机等)"""

    def __init__(self, id, name=None):
        self.id = _require_id(id, '平台ID')
        self.name = name or self.id

    def to_dict(self):
        return {'id': self.id, 'name': self.name}

    @classmethod
    def from_dict(cls, data):
        return cls(data['id'], data.get('name'))


class Sensor:
    """安装在平台上的传感器, 安装位姿把传感器坐标变换到世界坐标"""

    def __init__(self, id, platform_id, model=None, mount_translation=None, mount_rotation=None):
        self.id = _require_id(id, '传感器ID')
        self.platform_id = _require_id(platform_id, '平台ID')
        self.model = model or 'unknown'
        self.mount = RigidTransform(mount_rotation, mount_translation)

    def to_dict(self):
        return {
            'id': self.id,
            'platform_id': self.platform_id,
            'model': self.model,
            'mount_translation': self.mount.translation.tolist(),
            'mount_rotation': self.mount.rotation.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data['id'], data['platform_id'], data.get('model'),
                   data.get('mount_translation'), data.get('mount_rotation'))


class Campaign:
    """一次采集活动"""

    def __init__(self, id, platform_id, start_time_ns=0, description='', environment=None):
        self.id = _require_id(id, '采集活动ID')
        self.platform_id = _require_id(platform_id, '平台ID')
        self.start_time_ns = int(start_time_ns)
        self.description = description or ''
        self.environment = sorted(environment or [])

    def to_dict(self):
        return {
            'id': self.id,
            'platform_id': self.platform_id,
            'start_time_ns': self.start_time_ns,
            'description': self.description,
            'environment': self.environment,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data['id'], data['platform_id'], data.get('start_time_ns', 0),
                   data.get('description', ''), data.get('environment'))


class Package:
    """数据包: 一个采集活动中一个传感器的一段连续光束"""

    def __init__(self, id, campaign_id, sensor_id, envelope, beam_count, byte_size, file_name,
                 time_range=None, associated=False):
        self.id = int(id)
        self.campaign_id = campaign_id
        self.sensor_id = sensor_id
        self.envelope = envelope
        self.beam_count = int(beam_count)
        self.byte_size = int(byte_size)
        self.file_name = file_name
        self.time_range = tuple(time_range) if time_range else None
        self.associated = bool(associated)

    def to_dict(self):
        return {
            'id': self.id,
            'campaign_id': self.campaign_id,
            'sensor_id': self.sensor_id,
            'envelope': self.envelope.to_dict(),
            'beam_count': self.beam_count,
            'byte_size': self.byte_size,
            'file_name': self.file_name,
            'time_range': list(self.time_range) if self.time_range else None,
            'associated': self.associated,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            id=data['id'],
            campaign_id=data['campaign_id'],
            sensor_id=data['sensor_id'],
            envelope=Aabb.from_dict(data['envelope']),
            beam_count=data['beam_count'],
            byte_size=data['byte_size'],
            file_name=data['file_name'],
            time_range=data.get('time_range'),
            associated=data.get('associated', False),
        )

    @staticmethod
    def envelope_of(origins, reflection_points):
        """包络: 包含全部传感器位置和反射点的包围盒"""
        return Aabb.from_points(np.vstack((np.asarray(origins).reshape(-1, 3),
                                           np.asarray(reflection_points).reshape(-1, 3))))
