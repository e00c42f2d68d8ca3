"""点云配准测试"""
import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from app.models.point_cloud import PointCloud, RigidTransform
from app.services.registration_service import RegistrationService
from app.utils.errors import ConfigError, DataIntegrityError, SingularConfigurationError


def jittered_grid(rng, size=5, spacing=1.0, jitter=0.1):
    """以原点为中心的抖动规则网格"""
    axis = (np.arange(size) - (size - 1) / 2.0) * spacing
    grid = np.stack(np.meshgrid(axis, axis, axis, indexing='ij'), axis=-1).reshape(-1, 3)
    return PointCloud(grid + rng.uniform(-jitter, jitter, size=grid.shape))


def rotation_z(degrees):
    return Rotation.from_euler('z', degrees, degrees=True).as_matrix()


class TestRigidTransform:
    def test_identity(self):
        transform = RigidTransform.identity()
        assert transform.is_identity()
        np.testing.assert_array_equal(transform.apply([[1.0, 2.0, 3.0]]), [[1.0, 2.0, 3.0]])

    def test_inverse_and_compose(self):
        transform = RigidTransform(rotation_z(30), (1.0, -2.0, 0.5))
        roundtrip = transform.compose(transform.inverse())
        np.testing.assert_allclose(roundtrip.rotation, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(roundtrip.translation, 0.0, atol=1e-12)

    def test_matrix_round_trip(self):
        transform = RigidTransform(rotation_z(10), (0.1, 0.2, 0.3))
        again = RigidTransform.from_matrix(transform.to_matrix())
        np.testing.assert_array_equal(again.rotation, transform.rotation)
        np.testing.assert_array_equal(again.translation, transform.translation)

    def test_rotation_angle(self):
        assert RigidTransform(rotation_z(5)).rotation_angle_deg() == pytest.approx(5.0)

    def test_rejects_reflection(self):
        with pytest.raises(ConfigError):
            RigidTransform(np.diag([1.0, -1.0, 1.0]))

    def test_point_cloud_rejects_nan(self):
        with pytest.raises(DataIntegrityError):
            PointCloud([[0.0, math.nan, 0.0]])


# ---------------------------------------------------------------------------
# 适配度
# ---------------------------------------------------------------------------

class TestScoreAlignment:
    def test_perfect_alignment(self, rng):
        cloud = jittered_grid(rng)
        fitness, rmse = RegistrationService.score_alignment(cloud, cloud, RigidTransform.identity())
        assert fitness == 1.0
        assert rmse == 0.0

    def test_far_apart(self, rng):
        cloud = jittered_grid(rng)
        moved = cloud.transformed(RigidTransform(translation=(100.0, 0.0, 0.0)))
        fitness, rmse = RegistrationService.score_alignment(moved, cloud, RigidTransform.identity())
        assert fitness == 0.0
        assert rmse is None

    def test_fitness_is_relative_to_target(self, rng):
        cloud = jittered_grid(rng, size=4)
        half = PointCloud(cloud.points[:32])
        identity = RigidTransform.identity()
        assert RegistrationService.score_alignment(half, cloud, identity, 0.01)[0] == pytest.approx(0.5)
        assert RegistrationService.score_alignment(cloud, half, identity, 0.01)[0] == pytest.approx(1.0)

    def test_duplicated_source_does_not_exceed_one(self, rng):
        """源点云把每个目标点重复两次时, 适配度按不同目标点计数, 仍为1"""
        target = PointCloud(rng.uniform(-1.0, 1.0, size=(100, 3)))
        offset = np.array([1e-4, 0.0, 0.0])
        source = PointCloud(np.vstack([target.points + offset, target.points - offset]))
        assert len(source) == 200
        fitness, rmse = RegistrationService.score_alignment(source, target, RigidTransform.identity(), 0.01)
        assert fitness == 1.0
        assert rmse == pytest.approx(1e-4)

    def test_empty_target(self, rng):
        with pytest.raises(DataIntegrityError):
            RegistrationService.score_alignment(jittered_grid(rng), PointCloud([]), RigidTransform.identity())

    def test_empty_source(self, rng):
        assert RegistrationService.score_alignment(PointCloud([]), jittered_grid(rng),
                                                   RigidTransform.identity()) == (0.0, None)


# ---------------------------------------------------------------------------
# ICP
# ---------------------------------------------------------------------------

class TestIcp:
    def test_identical_clouds(self, rng):
        cloud = jittered_grid(rng)
        result = RegistrationService.icp_point_to_point(cloud, cloud)
        assert result.transform.is_identity() or np.allclose(result.transform.to_matrix(), np.eye(4), atol=1e-12)
        assert result.fitness == 1.0
        assert result.rmse == pytest.approx(0.0, abs=1e-12)
        assert result.converged

    def test_recovers_translation(self, rng):
        target = jittered_grid(rng)
        expected = RigidTransform(translation=(0.1, 0.0, 0.0))
        source = target.transformed(expected.inverse())
        result = RegistrationService.icp_point_to_point(source, target, max_iter=100)
        np.testing.assert_allclose(result.transform.translation, [0.1, 0.0, 0.0], atol=1e-6)
        np.testing.assert_allclose(result.transform.rotation, np.eye(3), atol=1e-6)
        assert result.rmse < 1e-6
        assert result.converged

    def test_recovers_rotation(self, rng):
        target = jittered_grid(rng)
        expected = RigidTransform(rotation_z(5), (0.05, -0.05, 0.02))
        source = target.transformed(expected.inverse())
        result = RegistrationService.icp_point_to_point(source, target, max_iter=100)
        np.testing.assert_allclose(result.transform.rotation, expected.rotation, atol=1e-6)
        np.testing.assert_allclose(result.transform.translation, expected.translation, atol=1e-6)
        assert result.transform.rotation_angle_deg() == pytest.approx(5.0, abs=1e-4)
        assert result.fitness == 1.0

    def test_recovers_rotation_with_noise(self, rng):
        target = jittered_grid(rng)
        expected = RigidTransform(rotation_z(5))
        source = PointCloud(expected.inverse().apply(target.points) + rng.normal(0.0, 0.005, target.points.shape))
        result = RegistrationService.icp_point_to_point(source, target, max_iter=100)
        assert result.transform.rotation_angle_deg() == pytest.approx(5.0, abs=0.1)
        assert result.rmse < 0.02

    @pytest.mark.parametrize('seed', range(10))
    def test_recovers_random_small_transform(self, seed):
        """随机轴旋转 ≤ 3°、平移 ≤ 5 cm: 变换被恢复且RMSE序列不增"""
        rng = np.random.default_rng(seed)
        target = jittered_grid(rng)
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = math.radians(float(rng.uniform(0.5, 3.0)))
        expected = RigidTransform(Rotation.from_rotvec(axis * angle).as_matrix(), rng.uniform(-0.05, 0.05, size=3))
        source = target.transformed(expected.inverse())

        result = RegistrationService.icp_point_to_point(source, target, max_iter=100)
        np.testing.assert_allclose(result.transform.rotation, expected.rotation, atol=1e-6)
        np.testing.assert_allclose(result.transform.translation, expected.translation, atol=1e-6)
        assert result.converged
        assert result.fitness == 1.0
        assert np.all(np.diff(result.rmse_history) <= 1e-12)

    def test_duplicated_source_fitness_is_bounded(self, rng):
        target = PointCloud(rng.uniform(-1.0, 1.0, size=(100, 3)))
        offset = np.array([1e-4, 0.0, 0.0])
        source = PointCloud(np.vstack([target.points + offset, target.points - offset]))
        result = RegistrationService.icp_point_to_point(source, target)
        assert result.fitness == 1.0
        assert result.rmse == pytest.approx(1e-4, rel=1e-3)

    def test_initial_guess_is_used(self, rng):
        target = jittered_grid(rng)
        expected = RigidTransform(translation=(3.0, 0.0, 0.0))
        source = target.transformed(expected.inverse())
        result = RegistrationService.icp_point_to_point(source, target, init=expected)
        np.testing.assert_allclose(result.transform.translation, [3.0, 0.0, 0.0], atol=1e-9)

    def test_rmse_history_starts_with_initial(self, rng):
        target = jittered_grid(rng)
        source = target.transformed(RigidTransform(translation=(-0.1, 0.0, 0.0)))
        result = RegistrationService.icp_point_to_point(source, target)
        assert result.rmse_history[0] == pytest.approx(0.1)
        assert len(result.rmse_history) == result.iterations + 1

    def test_collinear_source(self, rng):
        line = PointCloud([[x, 0.0, 0.0] for x in range(10)])
        with pytest.raises(SingularConfigurationError):
            RegistrationService.icp_point_to_point(line, jittered_grid(rng))

    def test_empty_cloud(self, rng):
        with pytest.raises(DataIntegrityError):
            RegistrationService.icp_point_to_point(PointCloud([]), jittered_grid(rng))

    def test_solve_rigid_exact(self, rng):
        points = rng.uniform(-1.0, 1.0, size=(20, 3))
        expected = RigidTransform(rotation_z(40), (1.0, 2.0, 3.0))
        solved = RegistrationService.solve_rigid(points, expected.apply(points))
        np.testing.assert_allclose(solved.rotation, expected.rotation, atol=1e-10)
        np.testing.assert_allclose(solved.translation, expected.translation, atol=1e-10)
