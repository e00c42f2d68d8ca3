"""点到点ICP配准服务"""
import math
import numpy as np
from scipy.spatial import cKDTree
from app.models.point_cloud import RegistrationResult, RigidTransform
from app.utils.errors import DataIntegrityError, SingularConfigurationError
from app.utils.logger import get_logger

logger = get_logger(__name__)

# 判定点集退化(共线或重合)的相对奇异值阈值
SINGULAR_TOLERANCE = 1e-9


class RegistrationService:
    """配准服务类"""

    @staticmethod
    def _check_non_degenerate(points, label):
        """点集共线或重合时无法确定旋转"""
        centered = points - points.mean(axis=0)
        singular = np.linalg.svd(centered, compute_uv=False)
        scale = max(1.0, float(singular[0])) if singular.size else 1.0
        if singular.size < 2 or float(singular[1]) <= SINGULAR_TOLERANCE * scale:
            raise SingularConfigurationError(f'{label}点集退化(共线或重合), 无法求解刚体变换')

    @staticmethod
    def solve_rigid(source_points, target_points):
        """
        最小二乘刚体变换(互协方差矩阵SVD, 带反射修正)

        Args:
            source_points: (N, 3)
            target_points: (N, 3), 与source一一对应

        Returns:
            RigidTransform, 使 R·source + t ≈ target
        """
        RegistrationService._check_non_degenerate(source_points, '对应')
        source_centroid = source_points.mean(axis=0)
        target_centroid = target_points.mean(axis=0)
        covariance = (source_points - source_centroid).T @ (target_points - target_centroid)
        u, _, vt = np.linalg.svd(covariance)
        correction = np.diag([1.0, 1.0, np.sign(np.linalg.det(vt.T @ u.T)) or 1.0])
        rotation = vt.T @ correction @ u.T
        translation = target_centroid - rotation @ source_centroid
        return RigidTransform(rotation, translation)

    @staticmethod
    def _score(source_points, tree, transform, inlier_threshold, target_count):
        """计算适配度、内点RMSE及对应关系, 适配度按被匹配到的不同目标点计数"""
        moved = transform.apply(source_points)
        distances, nearest = tree.query(moved, k=1)
        inliers = distances <= inlier_threshold
        count = int(np.count_nonzero(inliers))
        fitness = np.unique(nearest[inliers]).size / target_count
        rmse = float(math.sqrt(np.mean(distances[inliers] ** 2))) if count else None
        return fitness, rmse, inliers, nearest

    @staticmethod
    def score_alignment(source, target, transform, inlier_threshold=1.0):
        """
        评估对齐质量

        适配度 = 有内点对应的不同目标点数 / 目标点数, 取值 [0, 1]；RMSE 只在内点对应上计算，
        没有内点时为None。

        Returns:
            (fitness, rmse)

        Raises:
            DataIntegrityError: 目标点云为空
        """
        if len(target) == 0:
            raise DataIntegrityError('目标点云为空, 无法计算适配度')
        if len(source) == 0:
            return 0.0, None
        tree = cKDTree(target.points)
        fitness, rmse, _, _ = RegistrationService._score(
            source.points, tree, transform, inlier_threshold, len(target))
        return fitness, rmse

    @staticmethod
    def icp_point_to_point(source, target, init=None, max_iter=50, inlier_threshold=1.0, convergence_tol=1e-9):
        """
        点到点ICP

        每次迭代把源点(经当前变换)与目标点云中的最近点配对，用内点对应重新求解
        刚体变换；RMSE变化小于 convergence_tol 或达到 max_iter 时停止。

        Args:
            source: 源点云
            target: 目标点云
            init: 初始变换
            max_iter: 最大迭代次数
            inlier_threshold: 内点距离阈值(米)
            convergence_tol: 收敛阈值

        Returns:
            RegistrationResult

        Raises:
            DataIntegrityError: 点云为空
            SingularConfigurationError: 源点云退化
        """
        if len(source) == 0 or len(target) == 0:
            raise DataIntegrityError('源点云和目标点云都不能为空')
        RegistrationService._check_non_degenerate(source.points, '源')

        transform = init or RigidTransform.identity()
        tree = cKDTree(target.points)
        target_count = len(target)
        logger.info(f'开始ICP配准: 源点数={len(source)}, 目标点数={target_count}, 阈值={inlier_threshold}')

        fitness, rmse, inliers, nearest = RegistrationService._score(
            source.points, tree, transform, inlier_threshold, target_count)
        history = [rmse]
        converged = False
        iterations = 0

        while iterations < max_iter and rmse is not None:
            iterations += 1
            candidate = RegistrationService.solve_rigid(
                source.points[inliers], target.points[nearest[inliers]])
            new_fitness, new_rmse, new_inliers, new_nearest = RegistrationService._score(
                source.points, tree, candidate, inlier_threshold, target_count)
            if new_rmse is None:
                logger.warning('ICP迭代后没有内点, 停止迭代')
                break
            change = abs(rmse - new_rmse)
            transform, fitness, rmse, inliers, nearest = candidate, new_fitness, new_rmse, new_inliers, new_nearest
            history.append(rmse)
            logger.debug(f'ICP迭代 {iterations}: fitness={fitness:.6f}, rmse={rmse:.6e}')
            if change < convergence_tol:
                converged = True
                break

        logger.info(f'ICP配准完成: 迭代={iterations}, 收敛={converged}, fitness={fitness:.4f}, rmse={rmse}')
        return RegistrationResult(transform, fitness, rmse, iterations, converged, history)
