"""命令行子命令

每个模块提供 register(subparsers)，为子命令设置 handler(args, config) -> 退出码。
"""
import json
import sys
from pathlib import Path
from app.models.run_config import RunConfig
from app.utils.errors import ConfigError
from app.utils.file_handler import FileHandler


def add_common_arguments(parser):
    """所有子命令共用的参数"""
    parser.add_argument('--config', dest='config_file', help='JSON配置文件, 命令行参数优先')
    parser.add_argument('--store', help='传感器数据库目录')
    parser.add_argument('--output', help='输出目录')
    parser.add_argument('--workers', type=int, help='工作线程数, 默认为可用核心数')
    parser.add_argument('--seed', type=int, help='随机种子')


def add_association_arguments(parser):
    parser.add_argument('--epsilon', type=float, help='平行判定阈值')
    parser.add_argument('--segment-length', dest='segment_length', type=float, help='不确定线段长度 ℓ(米)')
    parser.add_argument('--assoc-radius', dest='assoc_radius', type=float, help='关联半径 ρ(米)')
    parser.add_argument('--max-associations', dest='max_associations', type=int, help='每条光束最多关联数')
    parser.add_argument('--ordering', choices=('min_signed_distance', 'max_signed_distance'), help='候选排序')


def add_fingerprint_arguments(parser):
    parser.add_argument('--range-bin-size', dest='range_bin_size', type=float, help='距离分箱宽度(米)')
    parser.add_argument('--range-max', dest='range_max', type=float, help='最大距离(米)')
    parser.add_argument('--zenith-bins', dest='zenith_bins', type=parse_float_list, help='天顶角分箱边界(度), 逗号分隔')
    parser.add_argument('--range-bin', dest='range_bin', type=int, help='计算距离所用的距离分箱下标')
    parser.add_argument('--min-count', dest='min_count', type=int, help='分箱计为覆盖的最小光束数')


def add_filter_arguments(parser):
    for name, label in (('campaigns', '采集活动'), ('sensors', '传感器'), ('objects', '对象'),
                        ('classes', '类别'), ('functions', '功能')):
        parser.add_argument(f'--{name}', type=parse_str_list, help=f'只保留这些{label}, 逗号分隔')


def parse_float_list(text):
    try:
        return [float(part) for part in text.split(',') if part.strip()]
    except ValueError as e:
        raise ConfigError(f'无法解析数值列表: {text!r}') from e


def parse_str_list(text):
    return [part.strip() for part in text.split(',') if part.strip()]


def resolve_config(args, config, scene_values=None):
    """
    由配置类、场景、配置文件和命令行参数得到生效配置, 并把它输出到标准输出

    Returns:
        RunConfig
    """
    file_values = FileHandler.read_json(args.config_file) if getattr(args, 'config_file', None) else None
    keys = RunConfig.keys(config)
    flags = {key: value for key, value in vars(args).items() if key in keys}
    run_config = RunConfig.resolve(config, file_values, flags, scene_values)
    print(json.dumps({'command': args.command, 'config': run_config.to_dict()},
                     ensure_ascii=False, sort_keys=True))
    sys.stdout.flush()
    return run_config


def output_dir(run_config):
    path = Path(run_config.output)
    FileHandler.ensure_dir(path)
    return path


def emit(payload):
    """输出一行机器可读的JSON结果"""
    print(json.dumps(payload, ensure_ascii=False, sort_keys=True))
