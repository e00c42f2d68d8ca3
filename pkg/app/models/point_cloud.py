"""点云与刚体变换模型"""
import math
import numpy as np
from app.models.geometry import vec3
from app.models.sensor import check_rotation
from app.utils.errors import DataIntegrityError


class PointCloud:
    """点云, 可附带每个点的ID"""

    def __init__(self, points, ids=None):
        array = np.array(points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(array)):
            raise DataIntegrityError('点云包含非有限坐标')
        self.points = array
        if ids is not None:
            ids = list(ids)
            if len(ids) != len(array):
                raise DataIntegrityError(f'点ID数量({len(ids)})与点数({len(array)})不一致')
        self.ids = ids

    def __len__(self):
        return self.points.shape[0]

    def transformed(self, transform):
        return PointCloud(transform.apply(self.points), self.ids)

    def centroid(self):
        return self.points.mean(axis=0)


class RigidTransform:
    """刚体变换 x' = R·x + t"""

    def __init__(self, rotation=None, translation=None):
        self.rotation = check_rotation(np.eye(3) if rotation is None else rotation)
        self.translation = vec3((0.0, 0.0, 0.0) if translation is None else translation, 'translation')

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def from_matrix(cls, matrix):
        """由4×4齐次矩阵构造"""
        array = np.array(matrix, dtype=np.float64)
        if array.shape != (4, 4):
            raise DataIntegrityError('齐次变换矩阵必须是4×4')
        return cls(array[:3, :3], array[:3, 3])

    def to_matrix(self):
        matrix = np.eye(4)
        matrix[:3, :3] = self.rotation
        matrix[:3, 3] = self.translation
        return matrix

    def apply(self, points):
        array = np.asarray(points, dtype=np.float64)
        return array @ self.rotation.T + self.translation

    def apply_direction(self, directions):
        return np.asarray(directions, dtype=np.float64) @ self.rotation.T

    def compose(self, other):
        """先应用 other 再应用 self"""
        return RigidTransform(self.rotation @ other.rotation, self.rotation @ other.translation + self.translation)

    def inverse(self):
        rotation = self.rotation.T
        return RigidTransform(rotation, -(rotation @ self.translation))

    def is_identity(self):
        return bool(np.array_equal(self.rotation, np.eye(3)) and not np.any(self.translation))

    def rotation_angle_deg(self):
        """旋转角(度)"""
        cosine = (np.trace(self.rotation) - 1.0) / 2.0
        return math.degrees(math.acos(min(1.0, max(-1.0, cosine))))

    def to_dict(self):
        return {'rotation': self.rotation.tolist(), 'translation': self.translation.tolist()}

    @classmethod
    def from_dict(cls, data):
        if 'matrix' in data:
            return cls.from_matrix(data['matrix'])
        return cls(data.get('rotation'), data.get('translation'))


class RegistrationResult:
    """配准结果: 变换、适配度、均方根误差和迭代信息"""

    def __init__(self, transform, fitness, rmse, iterations, converged, rmse_history=None):
        self.transform = transform
        self.fitness = fitness
        self.rmse = rmse
        self.iterations = iterations
        self.converged = converged
        self.rmse_history = list(rmse_history or [])

    def to_dict(self):
        return {
            'transform': self.transform.to_dict(),
            'fitness': self.fitness,
            'rmse': self.rmse,
            'iterations': self.iterations,
            'converged': self.converged,
            'rmse_history': self.rmse_history,
        }
