"""分隔文本与场景文件读写

浮点数一律以 repr 形式写出, 读回后逐位一致; 空单元格表示缺失值。
"""
import csv
import io
from app.models.association import Association, ObjectStats
from app.models.beam import Beam, BeamRecord
from app.models.fingerprint import BinGrid, CellStats, Fingerprint, FingerprintKey
from app.models.point_cloud import PointCloud
from app.models.sensor import SensorModel, Trajectory
from app.models.surface import Scene
from app.utils.errors import BeamSurfaceError, ConfigError, DataIntegrityError
from app.utils.file_handler import FileHandler
from app.utils.logger import get_logger

logger = get_logger(__name__)

BEAM_COLUMNS = ('beam_id', 'ox', 'oy', 'oz', 'dx', 'dy', 'dz', 'range', 'intensity',
                'timestamp_ns', 'sensor_id', 'campaign_id')
ENRICHMENT_COLUMNS = ('surface_id', 'object_id', 'class_name', 'function',
                      'zenith', 'azimuth', 'signed_dist', 'min_dist')
ASSOCIATION_COLUMNS = ('beam_id', 'rank', 'surface_id', 'object_id', 'ix', 'iy', 'iz',
                       'signed_dist', 'min_dist', 'zenith', 'azimuth', 'azimuth_degenerate')
FINGERPRINT_COLUMNS = ('campaign_id', 'sensor_id', 'object_id', 'class_name', 'function',
                       'range_bin', 'zenith_bin', 'range_lo', 'range_hi', 'zenith_lo', 'zenith_hi',
                       'count', 'mean', 'std', 'median', 'q1', 'q3')


def format_cell(value):
    """单元格格式: None 为空, 浮点数用 repr"""
    if value is None:
        return ''
    if isinstance(value, bool):
        return '1' if value else '0'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _optional_float(text):
    return None if text in ('', None) else float(text)


def _optional_str(text):
    return None if text in ('', None) else text


def write_csv(file_path, header, rows):
    """原子写入CSV文件(逗号分隔, 换行符 \\n)"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(value) for value in row])
    FileHandler.atomic_write_text(file_path, buffer.getvalue())


def read_csv(file_path, required=()):
    """
    读取CSV文件为字典行

    Raises:
        MissingInputError: 文件不存在
        DataIntegrityError: 缺少必需列
    """
    content, _ = FileHandler.read_text_file(FileHandler.require_file(file_path))
    reader = csv.DictReader(io.StringIO(content))
    header = reader.fieldnames or []
    missing = [name for name in required if name not in header]
    if missing:
        raise DataIntegrityError(f'{file_path} 缺少列: {", ".join(missing)}')
    return list(reader)


# ----------------------------------------------------------------------
# 光束
# ----------------------------------------------------------------------

def write_beams_csv(file_path, beams, with_associations=False):
    """
    写出光束表

    Args:
        beams: Beam 或 BeamRecord 序列
        with_associations: 附加关联列
    """
    header = list(BEAM_COLUMNS) + (list(ENRICHMENT_COLUMNS) if with_associations else [])
    rows = []
    for item in beams:
        record = item if isinstance(item, BeamRecord) else BeamRecord(item)
        beam = record.beam
        row = [beam.beam_id, *[float(x) for x in beam.origin], *[float(x) for x in beam.direction],
               beam.range, beam.intensity, beam.timestamp_ns, beam.sensor_id, beam.campaign_id]
        if with_associations:
            enrichment = record.enrichment()
            row.extend(enrichment[name] for name in ENRICHMENT_COLUMNS)
        rows.append(row)
    write_csv(file_path, header, rows)
    logger.info(f'写出光束表: {file_path}, 行数={len(rows)}')


def read_beams_csv(file_path):
    """
    读取光束表, 无效行被跳过并计数

    Returns:
        (BeamRecord 列表, 无效行数)
    """
    rows = read_csv(file_path, required=BEAM_COLUMNS)
    records = []
    malformed = 0
    for line_number, row in enumerate(rows, start=2):
        try:
            beam = Beam.from_dict(row)
            if row.get('surface_id'):
                record = BeamRecord(
                    beam,
                    surface_id=row['surface_id'],
                    object_id=_optional_str(row.get('object_id')),
                    class_name=_optional_str(row.get('class_name')),
                    function=_optional_str(row.get('function')),
                    zenith=_optional_float(row.get('zenith')),
                    azimuth=_optional_float(row.get('azimuth')),
                    signed_dist=_optional_float(row.get('signed_dist')),
                    min_dist=_optional_float(row.get('min_dist')),
                )
            else:
                record = BeamRecord(beam)
        except (BeamSurfaceError, ValueError) as e:
            malformed += 1
            logger.warning(f'{file_path}:{line_number} 光束记录无效, 已跳过: {e}')
            continue
        records.append(record)
    logger.info(f'读取光束表: {file_path}, 有效={len(records)}, 无效={malformed}')
    return records, malformed


def write_ground_truth_csv(file_path, ground_truth):
    """写出仿真真值 beam_id → surface_id"""
    write_csv(file_path, ['beam_id', 'surface_id'],
              [[beam_id, ground_truth[beam_id]] for beam_id in sorted(ground_truth)])


def read_ground_truth_csv(file_path):
    rows = read_csv(file_path, required=('beam_id', 'surface_id'))
    try:
        return {int(row['beam_id']): row['surface_id'] for row in rows}
    except ValueError as e:
        raise DataIntegrityError(f'真值文件无效 {file_path}: {e}') from e


# ----------------------------------------------------------------------
# 关联与对象统计
# ----------------------------------------------------------------------

def write_associations_csv(file_path, associations):
    rows = []
    for a in sorted(associations, key=lambda a: (a.beam_id, a.rank)):
        rows.append([a.beam_id, a.rank, a.surface_id, a.object_id,
                     *[float(x) for x in a.intersection],
                     float(a.signed_dist), float(a.min_dist), float(a.zenith), float(a.azimuth),
                     a.azimuth_degenerate])
    write_csv(file_path, ASSOCIATION_COLUMNS, rows)
    logger.info(f'写出关联表: {file_path}, 行数={len(rows)}')


def read_associations_csv(file_path):
    """
    读取关联表

    Raises:
        DataIntegrityError: 行无法解析
    """
    associations = []
    for line_number, row in enumerate(read_csv(file_path, required=ASSOCIATION_COLUMNS), start=2):
        try:
            associations.append(Association(
                beam_id=int(row['beam_id']),
                surface_id=row['surface_id'],
                object_id=row['object_id'],
                intersection=(float(row['ix']), float(row['iy']), float(row['iz'])),
                signed_dist=float(row['signed_dist']),
                min_dist=float(row['min_dist']),
                zenith=float(row['zenith']),
                azimuth=float(row['azimuth']),
                rank=int(row['rank']),
                azimuth_degenerate=row['azimuth_degenerate'] == '1',
            ))
        except ValueError as e:
            raise DataIntegrityError(f'{file_path}:{line_number} 关联记录无效: {e}') from e
    return associations


def write_objects_csv(file_path, object_stats):
    """写出对象级统计, object_stats 为 object_id → ObjectStats"""
    rows = [[getattr(stats, name) for name in ObjectStats.FIELDS]
            for _, stats in sorted(object_stats.items())]
    write_csv(file_path, ObjectStats.FIELDS, rows)


# ----------------------------------------------------------------------
# 指纹与矩阵
# ----------------------------------------------------------------------

def write_fingerprints_csv(file_path, fingerprints):
    """每个 (指纹, 距离分箱, 天顶角分箱) 一行"""
    rows = []
    for key in sorted(fingerprints):
        fp = fingerprints[key]
        grid = fp.grid
        for i, row_cells in enumerate(fp.cells):
            for j, cell in enumerate(row_cells):
                rows.append([
                    key.campaign_id, key.sensor_id, key.object_id, fp.class_name, fp.function,
                    i, j,
                    float(grid.range_edges[i]), float(grid.range_edges[i + 1]),
                    float(grid.zenith_edges[j]), float(grid.zenith_edges[j + 1]),
                    cell.count, cell.mean, cell.std, cell.median, cell.q1, cell.q3,
                ])
    write_csv(file_path, FINGERPRINT_COLUMNS, rows)
    logger.info(f'写出指纹表: {file_path}, 指纹数={len(fingerprints)}')


def read_fingerprints_csv(file_path):
    """
    读取指纹表

    Returns:
        FingerprintKey → Fingerprint 的有序字典

    Raises:
        DataIntegrityError: 分箱不完整或各指纹网格不一致
    """
    grouped = {}
    labels = {}
    for row in read_csv(file_path, required=FINGERPRINT_COLUMNS):
        key = FingerprintKey(row['campaign_id'], row['sensor_id'], row['object_id'])
        labels[key] = (_optional_str(row['class_name']), _optional_str(row['function']))
        try:
            grouped.setdefault(key, []).append((
                int(row['range_bin']), int(row['zenith_bin']),
                float(row['range_lo']), float(row['range_hi']),
                float(row['zenith_lo']), float(row['zenith_hi']),
                CellStats(
                    count=int(row['count']),
                    mean=_optional_float(row['mean']),
                    std=_optional_float(row['std']),
                    median=_optional_float(row['median']),
                    q1=_optional_float(row['q1']),
                    q3=_optional_float(row['q3']),
                ),
            ))
        except ValueError as e:
            raise DataIntegrityError(f'{file_path} 指纹记录无效: {e}') from e

    fingerprints = {}
    grid = None
    for key in sorted(grouped):
        cells_by_index = {(i, j): (r0, r1, z0, z1, cell) for i, j, r0, r1, z0, z1, cell in grouped[key]}
        range_count = 1 + max(i for i, _ in cells_by_index)
        zenith_count = 1 + max(j for _, j in cells_by_index)
        if len(cells_by_index) != range_count * zenith_count:
            raise DataIntegrityError(f'指纹 {key.label()} 的分箱不完整')
        range_edges = [cells_by_index[(i, 0)][0] for i in range(range_count)]
        range_edges.append(cells_by_index[(range_count - 1, 0)][1])
        zenith_edges = [cells_by_index[(0, j)][2] for j in range(zenith_count)]
        zenith_edges.append(cells_by_index[(0, zenith_count - 1)][3])
        fp_grid = BinGrid(range_edges, zenith_edges)
        if grid is None:
            grid = fp_grid
        elif fp_grid != grid:
            raise DataIntegrityError(f'指纹 {key.label()} 的分箱网格与其他指纹不一致')
        cells = [[cells_by_index[(i, j)][4] for j in range(zenith_count)] for i in range(range_count)]
        class_name, function = labels[key]
        fingerprints[key] = Fingerprint(key, grid, cells, class_name, function)
    return fingerprints


def write_matrix_csv(file_path, matrix):
    """距离矩阵: 第一列为行标签, 表头为列标签"""
    header = [matrix.grouping] + matrix.labels
    rows = [[label] + matrix.values[i] for i, label in enumerate(matrix.labels)]
    write_csv(file_path, header, rows)


# ----------------------------------------------------------------------
# 点云
# ----------------------------------------------------------------------

def read_xyz(file_path):
    """
    读取点云文本: 每行 x y z(空格或逗号分隔), # 开头为注释

    Raises:
        DataIntegrityError: 行无法解析
    """
    content, _ = FileHandler.read_text_file(FileHandler.require_file(file_path))
    points = []
    for line_number, line in enumerate(content.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        parts = line.replace(',', ' ').split()
        if len(parts) < 3:
            raise DataIntegrityError(f'{file_path}:{line_number} 需要至少3个坐标')
        try:
            points.append([float(parts[0]), float(parts[1]), float(parts[2])])
        except ValueError as e:
            raise DataIntegrityError(f'{file_path}:{line_number} 坐标无效: {e}') from e
    return PointCloud(points)


def write_xyz(file_path, cloud):
    lines = [' '.join(repr(float(v)) for v in point) for point in cloud.points]
    FileHandler.atomic_write_text(file_path, '\n'.join(lines) + ('\n' if lines else ''))


# ----------------------------------------------------------------------
# 场景
# ----------------------------------------------------------------------

def load_scene(file_path):
    """
    读取场景JSON

    可选的 trajectory 和 sensor 段用于仿真。

    Returns:
        (Scene, Trajectory 或 None, SensorModel 或 None)
    """
    data = FileHandler.read_json(file_path)
    scene = Scene.from_dict(data)
    trajectory = Trajectory.from_list(data['trajectory']) if data.get('trajectory') else None
    try:
        sensor = SensorModel.from_dict(data['sensor']) if data.get('sensor') else None
    except TypeError as e:
        raise ConfigError(f'场景中的传感器参数无效: {e}') from e
    logger.info(f'读取场景: {file_path}, 表面数={len(scene)}')
    return scene, trajectory, sensor


def save_scene(file_path, scene, trajectory=None, sensor=None):
    data = scene.to_dict()
    if trajectory is not None:
        data['trajectory'] = trajectory.to_list()
    if sensor is not None:
        data['sensor'] = sensor.to_dict()
    FileHandler.write_json(file_path, data)
