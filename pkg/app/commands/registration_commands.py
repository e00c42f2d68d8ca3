"""点云配准子命令"""
import numpy as np
from app.commands import add_common_arguments, emit, output_dir, resolve_config
from app.models.point_cloud import PointCloud, RigidTransform
from app.services.registration_service import RegistrationService
from app.services.sensor_store import SensorStore
from app.utils import formats
from app.utils.errors import ConfigError
from app.utils.file_handler import FileHandler
from app.utils.logger import get_logger

logger = get_logger(__name__)


def register(subparsers):
    """注册 register 子命令"""
    parser = subparsers.add_parser('register', help='点到点ICP配准')
    add_common_arguments(parser)
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--source', help='源点云文本文件(x y z)')
    source.add_argument('--source-store', dest='source_store', help='以数据库中光束的反射点作为源点云')
    parser.add_argument('--target', required=True, help='目标点云文本文件(x y z)')
    parser.add_argument('--init', help='初始变换JSON(rotation/translation 或 matrix)')
    parser.add_argument('--inlier-threshold', dest='inlier_threshold', type=float, help='内点距离阈值(米)')
    parser.add_argument('--max-iterations', dest='max_iterations', type=int, help='最大迭代次数')
    parser.add_argument('--convergence-tol', dest='convergence_tol', type=float, help='收敛阈值')
    parser.set_defaults(handler=cmd_register)


def store_reflection_points(root):
    """数据库中全部光束的反射点"""
    columns = SensorStore.open(root).read_columns(names=('ox', 'oy', 'oz', 'dx', 'dy', 'dz', 'range'))
    origins = np.column_stack((columns['ox'], columns['oy'], columns['oz']))
    directions = np.column_stack((columns['dx'], columns['dy'], columns['dz']))
    return PointCloud(origins + columns['range'][:, None] * directions)


def cmd_register(args, config):
    """配准源点云到目标点云, 输出 registration.json 和变换后的源点云"""
    run_config = resolve_config(args, config)
    source = store_reflection_points(args.source_store) if args.source_store else formats.read_xyz(args.source)
    target = formats.read_xyz(args.target)
    init = None
    if args.init:
        data = FileHandler.read_json(args.init)
        if not isinstance(data, dict):
            raise ConfigError(f'初始变换文件格式无效: {args.init}')
        init = RigidTransform.from_dict(data)

    result = RegistrationService.icp_point_to_point(
        source, target, init=init,
        max_iter=run_config.max_iterations,
        inlier_threshold=run_config.inlier_threshold,
        convergence_tol=run_config.convergence_tol,
    )

    out = output_dir(run_config)
    payload = result.to_dict()
    payload['matrix'] = result.transform.to_matrix().tolist()
    payload['rotation_angle_deg'] = result.transform.rotation_angle_deg()
    FileHandler.write_json(out / 'registration.json', payload)
    formats.write_xyz(out / 'source_registered.xyz', source.transformed(result.transform))
    emit({'fitness': result.fitness, 'rmse': result.rmse, 'iterations': result.iterations,
          'converged': result.converged})
    return 0
