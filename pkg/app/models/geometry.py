"""几何基础类型

Vec3 统一使用形状为 (3,) 的 float64 numpy 数组表示；本模块中的类型在构造时完成校验，
之后视为不可变。
"""
import math
import numpy as np
from app.utils.errors import ConfigError, GeometryError

# 单位向量的长度容差
UNIT_TOLERANCE = 1e-9


def vec3(values, name='vector'):
    """
    转换并校验三维向量

    Args:
        values: 可迭代的三个数值
        name: 出错时使用的字段名

    Returns:
        float64数组, 形状(3,)

    Raises:
        GeometryError: 维度不对或包含非有限值
    """
    try:
        array = np.array(values, dtype=np.float64).reshape(-1)
    except (TypeError, ValueError) as e:
        raise GeometryError(f'{name} 不是数值向量: {values!r}') from e
    if array.shape != (3,):
        raise GeometryError(f'{name} 必须是三维向量: {values!r}')
    if not np.all(np.isfinite(array)):
        raise GeometryError(f'{name} 包含非有限值: {values!r}')
    return array


def unit_vec3(values, name='direction'):
    """转换并校验单位向量 (长度误差不超过 UNIT_TOLERANCE)"""
    array = vec3(values, name)
    norm = float(np.linalg.norm(array))
    if abs(norm - 1.0) > UNIT_TOLERANCE:
        raise GeometryError(f'{name} 不是单位向量: |v|={norm!r}')
    return array


def normalize(values, name='vector'):
    """归一化向量；零向量抛出GeometryError"""
    array = vec3(values, name)
    norm = float(np.linalg.norm(array))
    if norm == 0.0:
        raise GeometryError(f'{name} 为零向量, 无法归一化')
    return array / norm


class Ray:
    """一次测量: 传感器原点、单位方向和测量距离"""

    def __init__(self, origin, direction, range):
        self.origin = vec3(origin, 'origin')
        self.direction = unit_vec3(direction, 'direction')
        range = float(range)
        if not math.isfinite(range) or range < 0:
            raise GeometryError(f'测量距离必须是非负有限值: {range!r}')
        self.range = range

    def __repr__(self):
        return f'Ray(origin={self.origin.tolist()}, direction={self.direction.tolist()}, range={self.range})'


class Segment:
    """以测量点为中心、沿光束方向的不确定性线段"""

    def __init__(self, center, direction, half_length):
        self.center = vec3(center, 'center')
        self.direction = unit_vec3(direction, 'direction')
        half_length = float(half_length)
        if not half_length > 0:
            raise GeometryError(f'线段半长必须大于0: {half_length!r}')
        self.half_length = half_length

    @property
    def start(self):
        return self.center - self.half_length * self.direction

    @property
    def end(self):
        return self.center + self.half_length * self.direction

    def endpoints(self):
        return self.start, self.end

    def __repr__(self):
        return (f'Segment(center={self.center.tolist()}, direction={self.direction.tolist()}, '
                f'half_length={self.half_length})')


class LocalFrame:
    """表面上的正交局部坐标系 (u, v, n) 以及投影后的传感器原点"""

    def __init__(self, u, v, n, origin):
        self.u = u
        self.v = v
        self.n = n
        self.origin = origin

    def to_local(self, point):
        """
        把世界坐标点变换到局部坐标

        Returns:
            (pu, pv, pn)
        """
        offset = np.asarray(point, dtype=np.float64) - self.origin
        return float(offset @ self.u), float(offset @ self.v), float(offset @ self.n)

    def to_dict(self):
        return {
            'u': self.u.tolist(),
            'v': self.v.tolist(),
            'n': self.n.tolist(),
            'origin': self.origin.tolist(),
        }


class GeomParams:
    """关联几何参数: 阈值 epsilon, 球柱体半径, 线段长度"""

    def __init__(self, epsilon=1e-6, assoc_radius=0.05, segment_length=1.0):
        self.epsilon = float(epsilon)
        self.assoc_radius = float(assoc_radius)
        self.segment_length = float(segment_length)
        self.validate()

    def validate(self):
        for name in ('epsilon', 'assoc_radius', 'segment_length'):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ConfigError(f'{name} 必须是正数: {value!r}')

    @property
    def half_length(self):
        return self.segment_length / 2.0

    def to_dict(self):
        return {
            'epsilon': self.epsilon,
            'assoc_radius': self.assoc_radius,
            'segment_length': self.segment_length,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            epsilon=data.get('epsilon', 1e-6),
            assoc_radius=data.get('assoc_radius', 0.05),
            segment_length=data.get('segment_length', 1.0),
        )


class Aabb:
    """轴对齐包围盒 (闭区间)"""

    def __init__(self, min, max):
        self.min = vec3(min, 'min')
        self.max = vec3(max, 'max')
        if np.any(self.min > self.max):
            raise GeometryError(f'包围盒最小角大于最大角: {self.min.tolist()} / {self.max.tolist()}')

    @classmethod
    def from_points(cls, points):
        """计算点集的包围盒"""
        array = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if array.shape[0] == 0:
            raise GeometryError('空点集没有包围盒')
        return cls(array.min(axis=0), array.max(axis=0))

    def intersects(self, other):
        return bool(np.all(self.min <= other.max) and np.all(other.min <= self.max))

    def contains_points(self, points):
        """判断所有点是否都在包围盒内"""
        array = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return bool(np.all(array >= self.min) and np.all(array <= self.max))

    def to_dict(self):
        return {'min': self.min.tolist(), 'max': self.max.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(data['min'], data['max'])

    def __eq__(self, other):
        return (isinstance(other, Aabb)
                and np.array_equal(self.min, other.min)
                and np.array_equal(self.max, other.max))

    def __repr__(self):
        return f'Aabb(min={self.min.tolist()}, max={self.max.tolist()})'
