"""激光雷达扫描仿真服务

单回波、零发散角的光线投射。强度模型把发射功率、接收孔径和系统效率等常数
折叠进 intensity_scale，可选距离衰减项 (r_ref / r)^falloff。
"""
import math
import numpy as np
import shapely
from app.models.beam import Beam
from app.models.geometry import Aabb
from app.models.sensor import Trajectory
from app.models.surface import Material, Scene, Surface
from app.services.geometry import INSIDE_TOLERANCE
from app.services.spatial_index import SurfaceIndex
from app.services.task_scheduler import TaskScheduler
from app.utils.logger import get_logger

logger = get_logger(__name__)

# 距离衰减的参考距离(米)
REFERENCE_RANGE = 1.0

# 正面判定阈值: −d·n 必须大于该值
FRONT_FACING_EPSILON = 1e-12

# 标准反射板的反射率
SPECTRALON_REFLECTANCES = (0.20, 0.90, 0.043, 0.53)


class ReflectanceModel:
    """反射模型扩展点: 返回材质在给定入射角余弦下的反射因子"""

    name = 'base'

    def factor(self, reflectance, cos_incidence):
        raise NotImplementedError


class LambertianModel(ReflectanceModel):
    """各向同性朗伯反射: 因子 = ρ · cos θ"""

    name = 'lambertian'

    def factor(self, reflectance, cos_incidence):
        return reflectance * np.clip(cos_incidence, 0.0, 1.0)


class SimulatedScan:
    """仿真结果: 光束列表与真值表面"""

    def __init__(self, beams, ground_truth, sensor, poses_count):
        self.beams = beams
        self.ground_truth = ground_truth
        self.sensor = sensor
        self.poses_count = poses_count

    def __len__(self):
        return len(self.beams)

    def __iter__(self):
        for beam in self.beams:
            yield beam, self.ground_truth[beam.beam_id]


class ScanSimulator:
    """扫描仿真服务类"""

    @staticmethod
    def _cast_pose(pose_index, pose, scene, index, surfaces, sensor, directions, azimuth_index,
                   offsets_ns, seed, campaign_id, model):
        """对一个位姿投射全部射线"""
        rng = np.random.default_rng([seed, pose_index])
        origin = pose.position
        rays = directions @ pose.rotation.T
        count = rays.shape[0]

        best_t = np.full(count, np.inf)
        best_surface = np.full(count, -1, dtype=np.int64)
        best_cos = np.zeros(count)

        reach = Aabb(origin - sensor.max_range, origin + sensor.max_range)
        for surface_id in index.query_box(reach):
            surface = index.get(surface_id)
            d_dot_n = rays @ surface.normal
            front = -d_dot_n > FRONT_FACING_EPSILON
            if not np.any(front):
                continue
            t = np.full(count, np.inf)
            t[front] = ((surface.centroid - origin) @ surface.normal) / d_dot_n[front]
            valid = front & (t > 0.0) & (t <= sensor.max_range) & (t < best_t)
            if not np.any(valid):
                continue
            rows = np.nonzero(valid)[0]
            points = origin + t[rows, None] * rays[rows]
            planar = shapely.distance(surface.polygon, shapely.points(surface.to_plane(points)))
            inside = rows[np.asarray(planar) <= INSIDE_TOLERANCE]
            best_t[inside] = t[inside]
            best_surface[inside] = surfaces[surface_id]
            best_cos[inside] = -d_dot_n[inside]

        # 噪声对所有射线抽样, 保证随机流与命中情况无关
        range_noise = rng.normal(0.0, sensor.range_noise_std, count)
        intensity_noise = rng.normal(0.0, sensor.noise_std, count)

        hits = np.nonzero(best_surface >= 0)[0]
        surface_list = index.surfaces
        beams = []
        truth = {}
        for ray_index in hits:
            surface = surface_list[best_surface[ray_index]]
            true_range = float(best_t[ray_index])
            reflectance = scene.reflectance_of(surface)
            falloff = (REFERENCE_RANGE / true_range) ** sensor.range_falloff_exponent
            raw = sensor.intensity_scale * float(model.factor(reflectance, best_cos[ray_index])) * falloff
            intensity = min(max(raw + float(intensity_noise[ray_index]), 0.0), 255.0)
            measured = max(true_range + float(range_noise[ray_index]), 0.0)
            beam_id = pose_index * sensor.rays_per_pose + int(ray_index)
            beams.append(Beam(
                beam_id=beam_id,
                origin=origin,
                direction=rays[ray_index],
                range=measured,
                intensity=intensity,
                timestamp_ns=pose.timestamp_ns + int(offsets_ns[azimuth_index[ray_index]]),
                sensor_id=sensor.sensor_id,
                campaign_id=campaign_id,
            ))
            truth[beam_id] = surface.id
        return beams, truth

    @staticmethod
    def simulate_scan(scene, sensor, trajectory, seed=42, campaign_id='campaign-1', workers=None, model=None):
        """
        仿真扫描

        每个位姿的随机子流由 (seed, 位姿序号) 派生，结果与并行度无关。

        Args:
            scene: Scene
            sensor: SensorModel
            trajectory: Trajectory
            seed: 随机种子
            campaign_id: 采集活动ID
            workers: 工作线程数
            model: ReflectanceModel, 默认朗伯模型

        Returns:
            SimulatedScan
        """
        model = model or LambertianModel()
        index = SurfaceIndex.build(scene.surfaces)
        surfaces = {surface.id: i for i, surface in enumerate(index.surfaces)}
        directions, azimuth_index = sensor.ray_directions()
        offsets_ns = sensor.firing_offsets_ns()
        logger.info(f'开始仿真扫描: 表面数={len(scene)}, 位姿数={len(trajectory)}, '
                    f'每位姿射线数={sensor.rays_per_pose}, 种子={seed}')

        def cast(item):
            pose_index, pose = item
            return ScanSimulator._cast_pose(pose_index, pose, scene, index, surfaces, sensor, directions,
                                            azimuth_index, offsets_ns, seed, campaign_id, model)

        results = TaskScheduler.map_ordered(cast, list(enumerate(trajectory.poses)), workers, label='simulate')
        beams = []
        ground_truth = {}
        for pose_beams, pose_truth in results:
            beams.extend(pose_beams)
            ground_truth.update(pose_truth)

        logger.info(f'仿真扫描完成: 光束数={len(beams)}')
        return SimulatedScan(beams, ground_truth, sensor, len(trajectory))

    @staticmethod
    def fit_lambert(zeniths, intensities):
        """
        最小二乘拟合 I(θ) = I0 · cos θ

        Args:
            zeniths: 天顶角(弧度)
            intensities: 强度

        Returns:
            (I0, R²)
        """
        cosines = np.cos(np.asarray(zeniths, dtype=np.float64))
        values = np.asarray(intensities, dtype=np.float64)
        denominator = float(cosines @ cosines)
        if values.size == 0 or denominator == 0.0:
            return 0.0, 0.0
        i0 = float(cosines @ values) / denominator
        residual = float(np.sum((values - i0 * cosines) ** 2))
        total = float(np.sum((values - values.mean()) ** 2))
        if total == 0.0:
            return i0, 1.0 if residual == 0.0 else 0.0
        return i0, 1.0 - residual / total

    @staticmethod
    def spectralon_scene(distances=(2.0,), angles_deg=tuple(range(0, 90, 10)), reflectances=SPECTRALON_REFLECTANCES):
        """
        四条标准反射板场景及扫过距离和入射角的传感器位姿

        反射板位于 x = 0 平面、法向 +x，沿y方向并排 (每条 0.25 m × 1.0 m)。
        传感器位于 (d·cos a, d·sin a, 0)，相邻位姿间隔 0.1 s。

        Returns:
            (Scene, Trajectory)
        """
        width = 0.25
        materials = []
        surfaces = []
        for i, reflectance in enumerate(reflectances):
            name = f'spectralon-{reflectance * 100:g}'
            materials.append(Material(name, reflectance))
            y0 = -0.5 + i * width
            y1 = y0 + width
            surfaces.append(Surface(
                id=f'strip-{i + 1}',
                vertices=[(0.0, y0, -0.5), (0.0, y1, -0.5), (0.0, y1, 0.5), (0.0, y0, 0.5)],
                object_id=f'target-{reflectance * 100:g}',
                class_name='ReflectanceTarget',
                function=name,
                material=name,
                normal=(1.0, 0.0, 0.0),
            ))
        scene = Scene(surfaces, materials, name='spectralon')

        positions = []
        for distance in distances:
            for angle in angles_deg:
                a = math.radians(float(angle))
                positions.append((distance * math.cos(a), distance * math.sin(a), 0.0))
        return scene, Trajectory.stationary(positions, interval_ns=100_000_000)
