"""场景模型: 平面多边形表面、材质和场景"""
import math
import numpy as np
import shapely
from shapely.geometry import Polygon
from app.models.geometry import Aabb, normalize, vec3
from app.utils.errors import DuplicateIdError, GeometryError, UnknownReferenceError

# 顶点到平面的最大距离(米)
COPLANAR_TOLERANCE = 1e-6

# 选择面内参考轴时使用的阈值
AXIS_EPSILON = 1e-6


def reference_axis(normal, epsilon=AXIS_EPSILON):
    """
    选择与法向量不平行的参考轴

    法向量接近竖直时使用x轴，否则使用z轴。
    """
    if math.hypot(normal[0], normal[1]) < epsilon:
        return np.array([1.0, 0.0, 0.0])
    return np.array([0.0, 0.0, 1.0])


def newell_normal(vertices):
    """按顶点顺序用Newell方法计算单位法向量(右手定则)"""
    current = vertices
    following = np.roll(vertices, -1, axis=0)
    normal = np.array([
        np.sum((current[:, 1] - following[:, 1]) * (current[:, 2] + following[:, 2])),
        np.sum((current[:, 2] - following[:, 2]) * (current[:, 0] + following[:, 0])),
        np.sum((current[:, 0] - following[:, 0]) * (current[:, 1] + following[:, 1])),
    ])
    norm = float(np.linalg.norm(normal))
    if norm == 0.0:
        raise GeometryError('多边形面积为0, 无法计算法向量')
    return normal / norm


class Material:
    """漫反射材质"""

    def __init__(self, name, reflectance):
        if not name:
            raise GeometryError('材质名称不能为空')
        reflectance = float(reflectance)
        if not 0.0 <= reflectance <= 1.0:
            raise GeometryError(f'材质 {name} 的反射率超出[0, 1]: {reflectance!r}')
        self.name = str(name)
        self.reflectance = reflectance

    def to_dict(self):
        return {'name': self.name, 'reflectance': self.reflectance}

    @classmethod
    def from_dict(cls, data):
        return cls(data['name'], data['reflectance'])

    def __repr__(self):
        return f'Material({self.name!r}, {self.reflectance})'


class Surface:
    """
    平面多边形表面

    法向量未指定时由顶点顺序(Newell方法)确定。多边形同时保存为面内二维坐标下的
    shapely多边形，坐标原点为质心，坐标轴由 reference_axis 经Gram-Schmidt得到。
    """

    def __init__(self, id, vertices, object_id, class_name, function=None, material=None, normal=None):
        if id is None or str(id) == '':
            raise GeometryError('表面ID不能为空')
        if object_id is None or str(object_id) == '':
            raise GeometryError(f'表面 {id} 缺少对象ID')
        if not class_name:
            raise GeometryError(f'表面 {id} 缺少类别名称')

        self.id = str(id)
        self.object_id = str(object_id)
        self.class_name = str(class_name)
        self.function = str(function) if function not in (None, '') else None
        self.material = str(material) if material not in (None, '') else None

        points = np.array([vec3(v, f'surface {id} vertex') for v in vertices], dtype=np.float64)
        # 去掉重复的闭合顶点
        if len(points) > 1 and np.array_equal(points[0], points[-1]):
            points = points[:-1]
        if len(points) < 3:
            raise GeometryError(f'表面 {id} 顶点少于3个')
        self.vertices = points
        self.centroid = points.mean(axis=0)

        if normal is None:
            self.normal = newell_normal(points)
            self.normal_explicit = False
        else:
            self.normal = normalize(normal, f'surface {id} normal')
            self.normal_explicit = True

        offsets = (points - self.centroid) @ self.normal
        worst = float(np.max(np.abs(offsets)))
        if worst > COPLANAR_TOLERANCE:
            raise GeometryError(f'表面 {id} 顶点不共面: 最大偏离 {worst:.3e} m')

        axis = reference_axis(self.normal)
        axis_u = axis - (axis @ self.normal) * self.normal
        self.axis_u = axis_u / np.linalg.norm(axis_u)
        self.axis_v = np.cross(self.normal, self.axis_u)

        self.polygon = Polygon(self.to_plane(points))
        if not self.polygon.is_valid:
            raise GeometryError(f'表面 {id} 不是简单多边形: {shapely.is_valid_reason(self.polygon)}')
        shapely.prepare(self.polygon)

        self.bounds = Aabb.from_points(points)

    def to_plane(self, points):
        """
        把世界坐标点投影为面内二维坐标

        Args:
            points: (N, 3) 或 (3,) 数组

        Returns:
            (N, 2) 数组
        """
        offsets = np.asarray(points, dtype=np.float64).reshape(-1, 3) - self.centroid
        return np.column_stack((offsets @ self.axis_u, offsets @ self.axis_v))

    def height(self, points):
        """点到表面所在平面的有向距离(沿法向量为正)"""
        offsets = np.asarray(points, dtype=np.float64) - self.centroid
        return offsets @ self.normal

    def planar_distance(self, points):
        """投影点到多边形区域的面内距离, 区域内部为0"""
        coords = self.to_plane(points)
        return np.asarray(shapely.distance(self.polygon, shapely.points(coords)), dtype=np.float64)

    @property
    def edges(self):
        """多边形的边, 返回 (起点数组, 终点数组)"""
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def to_dict(self):
        data = {
            'id': self.id,
            'object_id': self.object_id,
            'class_name': self.class_name,
            'vertices': self.vertices.tolist(),
        }
        if self.function is not None:
            data['function'] = self.function
        if self.material is not None:
            data['material'] = self.material
        if self.normal_explicit:
            data['normal'] = self.normal.tolist()
        return data

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(
                id=data['id'],
                vertices=data['vertices'],
                object_id=data['object_id'],
                class_name=data['class_name'],
                function=data.get('function'),
                material=data.get('material'),
                normal=data.get('normal'),
            )
        except KeyError as e:
            raise GeometryError(f'表面定义缺少字段: {e.args[0]}') from e

    def __repr__(self):
        return f'Surface({self.id!r}, object={self.object_id!r}, class={self.class_name!r})'


class Scene:
    """场景: 表面列表与材质表"""

    # 未指定材质的表面在仿真中使用的反射率
    DEFAULT_REFLECTANCE = 0.5

    def __init__(self, surfaces, materials=None, name=None):
        self.name = name
        self.materials = {}
        for material in materials or []:
            if material.name in self.materials:
                raise DuplicateIdError(f'材质重复: {material.name}', duplicate_id=material.name)
            self.materials[material.name] = material

        self.surfaces = list(surfaces)
        self._by_id = {}
        for surface in self.surfaces:
            if surface.id in self._by_id:
                raise DuplicateIdError(f'表面ID重复: {surface.id}', duplicate_id=surface.id)
            if surface.material is not None and surface.material not in self.materials:
                raise UnknownReferenceError(f'表面 {surface.id} 引用了未定义的材质: {surface.material}')
            self._by_id[surface.id] = surface

    def get(self, surface_id):
        return self._by_id.get(surface_id)

    def __contains__(self, surface_id):
        return surface_id in self._by_id

    def __len__(self):
        return len(self.surfaces)

    def __iter__(self):
        return iter(self.surfaces)

    def surface_map(self):
        return dict(self._by_id)

    def reflectance_of(self, surface):
        if surface.material is None:
            return self.DEFAULT_REFLECTANCE
        return self.materials[surface.material].reflectance

    def to_dict(self):
        data = {
            'materials': [m.to_dict() for m in self.materials.values()],
            'surfaces': [s.to_dict() for s in self.surfaces],
        }
        if self.name:
            data['name'] = self.name
        return data

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or not isinstance(data.get('surfaces'), list):
            raise GeometryError('场景文件必须包含 surfaces 列表')
        try:
            materials = [Material.from_dict(m) for m in data.get('materials', [])]
        except (KeyError, TypeError) as e:
            raise GeometryError(f'材质定义无效: {e}') from e
        surfaces = [Surface.from_dict(s) for s in data['surfaces']]
        return cls(surfaces, materials, name=data.get('name'))
