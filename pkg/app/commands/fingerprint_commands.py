"""指纹、距离矩阵与特征导出子命令"""
from app.commands import (
    add_common_arguments,
    add_filter_arguments,
    add_fingerprint_arguments,
    emit,
    output_dir,
    parse_str_list,
    resolve_config,
)
from app.commands.association_commands import load_records
from app.services.fingerprint_service import FEATURE_COLUMNS, GROUPINGS, FingerprintService
from app.utils import formats
from app.utils.file_handler import FileHandler
from app.utils.logger import get_logger

logger = get_logger(__name__)


def register(subparsers):
    """注册 fingerprint、distmatrix 和 features 子命令"""
    parser = subparsers.add_parser('fingerprint', help='提取辐射指纹')
    add_common_arguments(parser)
    add_fingerprint_arguments(parser)
    add_filter_arguments(parser)
    parser.add_argument('--input', help='增强后的光束CSV(默认读取数据库)')
    parser.set_defaults(handler=cmd_fingerprint)

    parser = subparsers.add_parser('distmatrix', help='计算分组Q3距离矩阵')
    add_common_arguments(parser)
    add_fingerprint_arguments(parser)
    parser.add_argument('--fingerprints', help='指纹CSV(默认为输出目录下的 fingerprints.csv)')
    parser.add_argument('--group-by', dest='group_by', choices=GROUPINGS, default='class', help='分组方式')
    parser.set_defaults(handler=cmd_distmatrix)

    parser = subparsers.add_parser('features', help='导出特征矩阵')
    add_common_arguments(parser)
    parser.add_argument('--input', help='增强后的光束CSV(默认读取数据库)')
    parser.add_argument('--columns', type=parse_str_list, default=list(FEATURE_COLUMNS),
                        help=f'特征列, 逗号分隔, 可选 {",".join(FEATURE_COLUMNS)}')
    parser.set_defaults(handler=cmd_features)


def cmd_fingerprint(args, config):
    """提取指纹, 输出 fingerprints.csv 和 extraction_summary.json"""
    run_config = resolve_config(args, config)
    grid = run_config.bin_grid()
    record_filter = run_config.fingerprint_filter()
    records, malformed = load_records(args, run_config)

    fingerprints, summary = FingerprintService.extract_fingerprints(
        records, grid, record_filter, workers=run_config.workers)

    out = output_dir(run_config)
    formats.write_fingerprints_csv(out / 'fingerprints.csv', fingerprints)
    payload = summary.to_dict()
    payload['malformed'] = malformed
    payload['fingerprints'] = len(fingerprints)
    payload['covered'] = sum(1 for fp in fingerprints.values()
                             if fp.is_covered(run_config.range_bin, run_config.min_count))
    FileHandler.write_json(out / 'extraction_summary.json', payload)
    emit(payload)
    return 0


def cmd_distmatrix(args, config):
    """计算距离矩阵, 输出 distance_matrix_<分组>.csv"""
    run_config = resolve_config(args, config)
    out = output_dir(run_config)
    fingerprints = formats.read_fingerprints_csv(args.fingerprints or (out / 'fingerprints.csv'))
    matrix = FingerprintService.group_distance_matrix(
        fingerprints, args.group_by, run_config.range_bin, run_config.min_count)
    formats.write_matrix_csv(out / f'distance_matrix_{args.group_by}.csv', matrix)
    emit(matrix.to_dict())
    return 0


def cmd_features(args, config):
    """导出特征矩阵 features.csv"""
    run_config = resolve_config(args, config)
    records, _ = load_records(args, run_config)
    header, rows = FingerprintService.export_feature_matrix(records, args.columns)
    out = output_dir(run_config)
    formats.write_csv(out / 'features.csv', header, rows)
    emit({'rows': len(rows), 'columns': header})
    return 0
