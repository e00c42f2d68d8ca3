"""光束与表面之间的几何运算

所有函数都是纯函数，可以在任意多个工作线程中并发调用。
"""
import math
import numpy as np
import shapely
from shapely.geometry import LineString
from app.models.geometry import LocalFrame, Segment
from app.models.surface import reference_axis

# 交点落在多边形内(含边界)的面内距离容差
INSIDE_TOLERANCE = 1e-9

# 方位角退化判定: 交点与投影原点重合
AZIMUTH_DEGENERATE_RADIUS = 1e-12

TWO_PI = 2.0 * math.pi


def reflection_point(ray):
    """测量反射点 p_m = o + r·d"""
    return ray.origin + ray.range * ray.direction


def segment_from_ray(ray, params):
    """以反射点为中心、长度为 segment_length 的线段"""
    return Segment(reflection_point(ray), ray.direction, params.half_length)


def is_front_facing(direction, normal):
    """背面剔除条件 −d·n ≥ 0"""
    return float(-(direction @ normal)) >= 0.0


def _segment_to_segments_distance(p, q, starts, ends):
    """
    一条三维线段到一组线段的最短距离(向量化的最近点参数裁剪)

    Args:
        p, q: 线段端点, (3,)
        starts, ends: 其他线段端点, (M, 3)

    Returns:
        (M,) 距离数组
    """
    d1 = q - p
    d2 = ends - starts
    r = p - starts
    a = float(d1 @ d1)
    e = np.einsum('ij,ij->i', d2, d2)
    f = np.einsum('ij,ij->i', d2, r)
    c = r @ d1
    b = d2 @ d1

    safe_e = np.where(e > 0.0, e, 1.0)
    denom = a * e - b * b
    s = np.where(denom > 0.0, np.clip((b * f - c * e) / np.where(denom > 0.0, denom, 1.0), 0.0, 1.0), 0.0)
    # 退化的边按点处理
    s = np.where(e > 0.0, s, np.clip(-c / a, 0.0, 1.0))
    t = np.where(e > 0.0, (b * s + f) / safe_e, 0.0)

    below = t < 0.0
    above = t > 1.0
    s = np.where(below, np.clip(-c / a, 0.0, 1.0), s)
    s = np.where(above, np.clip((b - c) / a, 0.0, 1.0), s)
    t = np.clip(t, 0.0, 1.0)

    closest_first = p + s[:, None] * d1
    closest_second = starts + t[:, None] * d2
    return np.linalg.norm(closest_first - closest_second, axis=1)


def point_surface_distance(point, surface):
    """
    点到多边形区域的最短距离

    距离由到平面的高度和投影点到多边形的面内距离合成。
    """
    height = float(surface.height(point))
    planar = float(surface.planar_distance(point)[0])
    return math.hypot(height, planar)


def segment_surface_distance(segment, surface):
    """
    三维线段到多边形区域(平面内的二维区域)的精确最短距离

    线段穿过多边形时为0；线段位于平面内时退化为面内距离；其余情况下最近点对
    要么包含线段端点，要么位于多边形的某条边上。
    """
    start, end = segment.endpoints()
    h_start = float(surface.height(start))
    h_end = float(surface.height(end))

    if h_start == 0.0 and h_end == 0.0:
        line = LineString(surface.to_plane(np.vstack((start, end))))
        return float(shapely.distance(surface.polygon, line))

    if (h_start <= 0.0 <= h_end) or (h_end <= 0.0 <= h_start):
        crossing = start + (h_start / (h_start - h_end)) * (end - start)
        if float(surface.planar_distance(crossing)[0]) == 0.0:
            return 0.0

    planar = surface.planar_distance(np.vstack((start, end)))
    best = min(math.hypot(h_start, float(planar[0])), math.hypot(h_end, float(planar[1])))
    edge_starts, edge_ends = surface.edges
    edge_best = float(np.min(_segment_to_segments_distance(start, end, edge_starts, edge_ends)))
    return min(best, edge_best)


def spherocylinder_candidate(segment, surface, beam_dir, radius):
    """
    候选表面判定: 表面朝向光束且与线段的距离不超过半径

    Args:
        segment: 不确定性线段
        surface: 表面
        beam_dir: 光束单位方向
        radius: 球柱体半径

    Returns:
        是否为候选
    """
    if not is_front_facing(beam_dir, surface.normal):
        return False
    return segment_surface_distance(segment, surface) <= radius


def segment_surface_intersection(segment, surface, epsilon=1e-6):
    """
    线段与多边形(内部及边界)的交点

    线段与平面平行(|d·n| < epsilon)时视为无交点，即使线段位于平面内。

    Returns:
        交点数组或None
    """
    normal = surface.normal
    d_dot_n = float(segment.direction @ normal)
    if abs(d_dot_n) < epsilon:
        return None
    t = float((surface.centroid - segment.center) @ normal) / d_dot_n
    if abs(t) > segment.half_length:
        return None
    point = segment.center + t * segment.direction
    if float(surface.planar_distance(point)[0]) > INSIDE_TOLERANCE:
        return None
    return point


def signed_distance(p_m, p_i, d):
    """有向距离 (p_m − p_i)·d；交点在测量点之前时为正"""
    return float((np.asarray(p_m) - np.asarray(p_i)) @ np.asarray(d))


def zenith_angle(d, n):
    """入射光线与表面法向量的夹角, 取值 [0, π/2]"""
    cosine = float(np.clip(-(np.asarray(d) @ np.asarray(n)), -1.0, 1.0))
    return min(math.acos(cosine), math.pi / 2.0)


def local_frame(surface, sensor_origin, epsilon=1e-6):
    """
    构造表面的局部坐标系

    参考轴 â 在法向量接近竖直时取x轴，否则取z轴；û 为 â 在平面内的正交化结果，
    v̂ = n̂ × û；原点为传感器位置在表面平面上的正交投影。
    """
    n = surface.normal
    axis = reference_axis(n, epsilon)
    u = axis - (axis @ n) * n
    u = u / np.linalg.norm(u)
    v = np.cross(n, u)
    o = np.asarray(sensor_origin, dtype=np.float64)
    origin = o - ((o - surface.centroid) @ n) * n
    return LocalFrame(u, v, n, origin)


def azimuth_angle_checked(p_i, frame):
    """
    交点在局部坐标系中的方位角

    Returns:
        (方位角 [0, 2π), 是否退化)；交点与投影原点重合时返回 (0.0, True)
    """
    pu, pv, _ = frame.to_local(p_i)
    if math.hypot(pu, pv) < AZIMUTH_DEGENERATE_RADIUS:
        return 0.0, True
    phi = math.fmod(TWO_PI + math.atan2(pv, pu), TWO_PI)
    if phi >= TWO_PI or phi < 0.0:
        phi = 0.0
    return phi, False


def azimuth_angle(p_i, frame):
    """方位角, 退化时为0"""
    return azimuth_angle_checked(p_i, frame)[0]
