"""报告子命令"""
from app.commands import add_common_arguments, add_fingerprint_arguments, output_dir, resolve_config
from app.services.fingerprint_service import GROUPINGS, FingerprintService
from app.services.report_service import ReportService
from app.utils import formats
from app.utils.file_handler import FileHandler
from app.utils.logger import get_logger

logger = get_logger(__name__)


def register(subparsers):
    """注册 report 子命令"""
    parser = subparsers.add_parser('report', help='渲染关联统计、指纹和距离矩阵报告')
    add_common_arguments(parser)
    add_fingerprint_arguments(parser)
    parser.add_argument('--fingerprints', help='指纹CSV(默认为输出目录下的 fingerprints.csv)')
    parser.set_defaults(handler=cmd_report)


def cmd_report(args, config):
    """
    读取输出目录中已有的结果并渲染报告

    输出 report.txt、q3_plot.png 以及每种分组的 distance_matrix_<分组>.csv；缺少的
    结果文件对应的章节被跳过。
    """
    run_config = resolve_config(args, config)
    out = output_dir(run_config)
    sections = []

    summary_path = out / 'association_summary.json'
    if summary_path.is_file():
        sections.append('== 关联统计 ==\n' + ReportService.association_report(FileHandler.read_json(summary_path)))

    observations_path = out / 'observations.json'
    if observations_path.is_file():
        sections.append('== 对象观测次数 ==\n'
                        + ReportService.observation_report(FileHandler.read_json(observations_path)))

    fingerprints_path = args.fingerprints or (out / 'fingerprints.csv')
    if args.fingerprints or (out / 'fingerprints.csv').is_file():
        fingerprints = formats.read_fingerprints_csv(fingerprints_path)
        sections.append('== 辐射指纹 ==\n' + ReportService.fingerprint_report(fingerprints, run_config.range_bin))
        ReportService.render_q3_plot(fingerprints, out / 'q3_plot.png', run_config.range_bin)
        for grouping in GROUPINGS:
            matrix = FingerprintService.group_distance_matrix(
                fingerprints, grouping, run_config.range_bin, run_config.min_count)
            formats.write_matrix_csv(out / f'distance_matrix_{grouping}.csv', matrix)
            sections.append(f'== 距离矩阵 ({grouping}) ==\n' + ReportService.matrix_report(matrix))

    if not sections:
        logger.warning(f'输出目录中没有可报告的结果: {out}')
        sections.append('(没有可报告的结果)\n')

    text = '\n'.join(sections)
    FileHandler.atomic_write_text(out / 'report.txt', text)
    print(text, end='')
    return 0
