"""传感器模型与轨迹"""
import math
import numpy as np
from scipy.spatial.transform import Rotation, Slerp
from app.models.geometry import vec3
from app.utils.errors import ConfigError

# 旋转矩阵正交性容差
ROTATION_TOLERANCE = 1e-9


def check_rotation(matrix, name='rotation'):
    """
    校验旋转矩阵 (RᵀR = I, det R = 1)

    Returns:
        3×3 float64数组

    Raises:
        ConfigError: 不是合法旋转
    """
    array = np.array(matrix, dtype=np.float64)
    if array.shape != (3, 3) or not np.all(np.isfinite(array)):
        raise ConfigError(f'{name} 必须是有限的3×3矩阵')
    if np.max(np.abs(array.T @ array - np.eye(3))) > ROTATION_TOLERANCE:
        raise ConfigError(f'{name} 不是正交矩阵')
    if abs(np.linalg.det(array) - 1.0) > ROTATION_TOLERANCE:
        raise ConfigError(f'{name} 行列式不为1')
    return array


class SensorModel:
    """旋转式多线激光雷达的仿真参数(默认值对应VLP-16)"""

    def __init__(self, sensor_id='vlp16', channels=16, vertical_fov=(-15.0, 15.0), angular_step_h=0.2,
                 max_range=100.0, rotation_rate=10.0, intensity_scale=100.0, range_falloff_exponent=0.0,
                 noise_std=0.0, range_noise_std=0.0, wavelength_nm=903.0):
        self.sensor_id = str(sensor_id)
        self.channels = channels
        self.vertical_fov = tuple(float(x) for x in vertical_fov)
        self.angular_step_h = float(angular_step_h)
        self.max_range = float(max_range)
        self.rotation_rate = float(rotation_rate)
        self.intensity_scale = float(intensity_scale)
        self.range_falloff_exponent = float(range_falloff_exponent)
        self.noise_std = float(noise_std)
        self.range_noise_std = float(range_noise_std)
        self.wavelength_nm = float(wavelength_nm)
        self.validate()

    def validate(self):
        if not self.sensor_id:
            raise ConfigError('传感器ID不能为空')
        if isinstance(self.channels, bool) or not isinstance(self.channels, int) or self.channels < 1:
            raise ConfigError(f'通道数必须是正整数: {self.channels!r}')
        if len(self.vertical_fov) != 2 or not self.vertical_fov[0] < self.vertical_fov[1]:
            raise ConfigError(f'垂直视场必须满足 min < max: {self.vertical_fov}')
        if not (-90.0 <= self.vertical_fov[0] and self.vertical_fov[1] <= 90.0):
            raise ConfigError(f'垂直视场超出 [-90°, 90°]: {self.vertical_fov}')
        if not 0 < self.angular_step_h <= 360.0:
            raise ConfigError(f'水平角分辨率必须在 (0, 360] 度: {self.angular_step_h}')
        for name in ('max_range', 'rotation_rate', 'intensity_scale'):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ConfigError(f'{name} 必须为正: {value}')
        for name in ('range_falloff_exponent', 'noise_std', 'range_noise_std'):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigError(f'{name} 不能为负: {value}')

    @property
    def azimuth_steps(self):
        return max(1, int(round(360.0 / self.angular_step_h)))

    @property
    def rays_per_pose(self):
        return self.azimuth_steps * self.channels

    def channel_elevations(self):
        """各通道仰角(弧度), 在垂直视场内均匀分布"""
        if self.channels == 1:
            return np.array([math.radians(sum(self.vertical_fov) / 2.0)])
        return np.radians(np.linspace(self.vertical_fov[0], self.vertical_fov[1], self.channels))

    def ray_directions(self):
        """
        传感器坐标系下的单位射线方向

        射线顺序为方位角优先: ray_index = azimuth_index * channels + channel。

        Returns:
            (方向数组 (N, 3), 每条射线的方位角下标 (N,))
        """
        azimuths = np.radians(np.arange(self.azimuth_steps) * self.angular_step_h)
        elevations = self.channel_elevations()
        az, el = np.meshgrid(azimuths, elevations, indexing='ij')
        directions = np.stack((np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)), axis=-1)
        directions = directions.reshape(-1, 3)
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        azimuth_index = np.repeat(np.arange(self.azimuth_steps), self.channels)
        return directions, azimuth_index

    def firing_offsets_ns(self):
        """各方位角步相对于位姿时间戳的发射时间偏移(纳秒)"""
        sweep_ns = 1e9 / self.rotation_rate
        return np.round(np.arange(self.azimuth_steps) * sweep_ns / self.azimuth_steps).astype(np.int64)

    def to_dict(self):
        return {
            'sensor_id': self.sensor_id,
            'channels': self.channels,
            'vertical_fov': list(self.vertical_fov),
            'angular_step_h': self.angular_step_h,
            'max_range': self.max_range,
            'rotation_rate': self.rotation_rate,
            'intensity_scale': self.intensity_scale,
            'range_falloff_exponent': self.range_falloff_exponent,
            'noise_std': self.noise_std,
            'range_noise_std': self.range_noise_std,
            'wavelength_nm': self.wavelength_nm,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


class Pose:
    """带时间戳的位姿"""

    def __init__(self, position, rotation=None, timestamp_ns=0):
        self.position = vec3(position, 'position')
        self.rotation = check_rotation(np.eye(3) if rotation is None else rotation)
        self.timestamp_ns = int(timestamp_ns)

    def to_dict(self):
        return {
            'position': self.position.tolist(),
            'rotation': self.rotation.tolist(),
            'timestamp_ns': self.timestamp_ns,
        }

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(data['position'], data.get('rotation'), data.get('timestamp_ns', 0))
        except KeyError as e:
            raise ConfigError(f'位姿缺少字段: {e.args[0]}') from e


class Trajectory:
    """位姿序列: 位置线性插值，姿态球面线性插值"""

    def __init__(self, poses):
        self.poses = list(poses)
        if not self.poses:
            raise ConfigError('轨迹至少需要一个位姿')
        stamps = [p.timestamp_ns for p in self.poses]
        if any(b <= a for a, b in zip(stamps, stamps[1:])):
            raise ConfigError('轨迹时间戳必须严格递增')
        self._slerp = None
        if len(self.poses) > 1:
            self._slerp = Slerp(np.array(stamps, dtype=np.float64),
                                Rotation.from_matrix(np.array([p.rotation for p in self.poses])))

    def __len__(self):
        return len(self.poses)

    def __iter__(self):
        return iter(self.poses)

    @property
    def start_ns(self):
        return self.poses[0].timestamp_ns

    @property
    def end_ns(self):
        return self.poses[-1].timestamp_ns

    def pose_at(self, timestamp_ns):
        """
        插值得到指定时刻的位姿

        Raises:
            ConfigError: 时刻超出轨迹范围
        """
        timestamp_ns = int(timestamp_ns)
        if not self.start_ns <= timestamp_ns <= self.end_ns:
            raise ConfigError(f'时间戳超出轨迹范围: {timestamp_ns}')
        stamps = [p.timestamp_ns for p in self.poses]
        upper = int(np.searchsorted(stamps, timestamp_ns, side='left'))
        if stamps[upper] == timestamp_ns:
            return self.poses[upper]
        before, after = self.poses[upper - 1], self.poses[upper]
        fraction = (timestamp_ns - before.timestamp_ns) / (after.timestamp_ns - before.timestamp_ns)
        position = before.position + fraction * (after.position - before.position)
        rotation = self._slerp([float(timestamp_ns)]).as_matrix()[0]
        # 消除插值带来的舍入误差
        u, _, vt = np.linalg.svd(rotation)
        rotation = u @ vt
        return Pose(position, rotation, timestamp_ns)

    def densify(self, step_ns):
        """按固定时间间隔重采样轨迹(包含首尾位姿)"""
        step_ns = int(step_ns)
        if step_ns <= 0:
            raise ConfigError(f'重采样间隔必须为正: {step_ns}')
        stamps = list(range(self.start_ns, self.end_ns, step_ns))
        if not stamps or stamps[-1] != self.end_ns:
            stamps.append(self.end_ns)
        return Trajectory([self.pose_at(t) for t in stamps])

    def to_list(self):
        return [p.to_dict() for p in self.poses]

    @classmethod
    def from_list(cls, items):
        return cls([Pose.from_dict(item) for item in items])

    @classmethod
    def stationary(cls, positions, interval_ns=100_000_000):
        """在若干固定位置各放一个位姿, 姿态为单位阵"""
        return cls([Pose(p, None, i * interval_ns) for i, p in enumerate(positions)])
