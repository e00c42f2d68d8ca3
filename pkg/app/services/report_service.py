"""报告渲染服务: 对齐文本表格与指纹Q3曲线图"""
import math
from pathlib import Path
from PIL import Image, ImageDraw, ImageFont
from app.utils.file_handler import FileHandler
from app.utils.logger import get_logger

logger = get_logger(__name__)

# 曲线颜色(循环使用)
PALETTE = (
    (31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40), (148, 103, 189),
    (140, 86, 75), (227, 119, 194), (127, 127, 127), (188, 189, 34), (23, 190, 207),
)

INTENSITY_AXIS_MAX = 255.0


def _cell(value):
    if value is None:
        return '-'
    if isinstance(value, float):
        return f'{value:.4f}'
    return str(value)


class ReportService:
    """报告服务类"""

    @staticmethod
    def format_table(header, rows):
        """
        渲染对齐文本表格

        数字右对齐、文本左对齐，None 显示为 '-'。
        """
        cells = [[_cell(v) for v in row] for row in rows]
        widths = [len(str(h)) for h in header]
        for row in cells:
            for i, text in enumerate(row):
                widths[i] = max(widths[i], len(text))

        def line(values, raw=None):
            parts = []
            for i, text in enumerate(values):
                numeric = raw is not None and isinstance(raw[i], (int, float)) and not isinstance(raw[i], bool)
                parts.append(text.rjust(widths[i]) if numeric else text.ljust(widths[i]))
            return '  '.join(parts).rstrip()

        output = [line([str(h) for h in header]), '  '.join('-' * w for w in widths)]
        for raw, row in zip(rows, cells):
            output.append(line(row, raw))
        return '\n'.join(output) + '\n'

    @staticmethod
    def association_report(summary):
        """关联统计表, summary 为 AssociationSummary.to_dict() 的结果"""
        rows = [
            ['光束总数', summary['total']],
            ['已关联', summary['associated']],
            ['未关联', summary['unassociated']],
            ['关联比例', summary['associated_fraction']],
            ['无效记录', summary['malformed']],
            ['零距离', summary['zero_range']],
            ['15 m 以内占比', summary['share_within_15m']],
            ['30 m 以内占比', summary['share_within_30m']],
        ]
        text = ReportService.format_table(['指标', '值'], rows)
        if summary.get('per_class'):
            class_rows = [[name, count] for name, count in sorted(summary['per_class'].items())]
            text += '\n' + ReportService.format_table(['类别', '关联光束数'], class_rows)
        return text

    @staticmethod
    def fingerprint_report(fingerprints, range_bin=0):
        """每个指纹在指定距离分箱上的计数与Q3"""
        if not fingerprints:
            return '(无指纹)\n'
        grid = next(iter(fingerprints.values())).grid
        labels = grid.zenith_labels()
        header = ['指纹', '类别', '功能'] + [f'n {z}' for z in labels] + [f'Q3 {z}' for z in labels]
        rows = []
        for key in sorted(fingerprints):
            fp = fingerprints[key]
            cells = fp.cells[range_bin]
            rows.append([key.label(), fp.class_name, fp.function]
                        + [cell.count for cell in cells] + [cell.q3 for cell in cells])
        return f'距离分箱 {grid.range_labels()[range_bin]}\n' + ReportService.format_table(header, rows)

    @staticmethod
    def matrix_report(matrix):
        """距离矩阵表格"""
        header = [matrix.grouping] + matrix.labels
        rows = [[label] + matrix.values[i] for i, label in enumerate(matrix.labels)]
        return ReportService.format_table(header, rows)

    @staticmethod
    def observation_report(observations):
        rows = [[name, count] for name, count in observations['per_class'].items()]
        rows.append(['合计', observations['total']])
        return ReportService.format_table(['类别', '观测次数'], rows)

    @staticmethod
    def render_q3_plot(fingerprints, file_path, range_bin=0, width=900, height=540):
        """
        绘制各指纹Q3随天顶角分箱变化的折线图(PNG)

        横轴为天顶角分箱中点(度)，纵轴为强度 0~255；缺失的分箱断开折线。
        """
        margin_left, margin_right, margin_top, margin_bottom = 70, 260, 30, 60
        image = Image.new('RGB', (width, height), color=(255, 255, 255))
        draw = ImageDraw.Draw(image)
        font = ImageFont.load_default()

        plot_w = width - margin_left - margin_right
        plot_h = height - margin_top - margin_bottom
        x0, y0 = margin_left, margin_top + plot_h
        draw.rectangle([margin_left, margin_top, margin_left + plot_w, y0], outline=(0, 0, 0))

        def to_px(zenith_deg, value):
            x = x0 + zenith_deg / 90.0 * plot_w
            y = y0 - min(max(value, 0.0), INTENSITY_AXIS_MAX) / INTENSITY_AXIS_MAX * plot_h
            return x, y

        for tick in range(0, 91, 10):
            x, _ = to_px(tick, 0.0)
            draw.line([(x, y0), (x, y0 + 5)], fill=(0, 0, 0))
            draw.text((x - 6, y0 + 8), str(tick), fill=(0, 0, 0), font=font)
        for tick in range(0, 256, 50):
            _, y = to_px(0.0, float(tick))
            draw.line([(x0 - 5, y), (x0, y)], fill=(0, 0, 0))
            draw.text((x0 - 30, y - 5), str(tick), fill=(0, 0, 0), font=font)
        draw.text((margin_left + plot_w / 2 - 40, height - 25), 'zenith (deg)', fill=(0, 0, 0), font=font)
        draw.text((8, margin_top - 20), 'Q3 intensity', fill=(0, 0, 0), font=font)

        for n, key in enumerate(sorted(fingerprints)):
            fp = fingerprints[key]
            color = PALETTE[n % len(PALETTE)]
            edges = [math.degrees(z) for z in fp.grid.zenith_edges]
            segment = []
            for j, q3 in enumerate(fp.q3_profile(range_bin)):
                if q3 is None:
                    if len(segment) > 1:
                        draw.line(segment, fill=color, width=2)
                    segment = []
                    continue
                point = to_px((edges[j] + edges[j + 1]) / 2.0, q3)
                draw.ellipse([point[0] - 3, point[1] - 3, point[0] + 3, point[1] + 3], fill=color)
                segment.append(point)
            if len(segment) > 1:
                draw.line(segment, fill=color, width=2)
            legend_y = margin_top + 14 * n
            draw.rectangle([width - margin_right + 15, legend_y + 2, width - margin_right + 25, legend_y + 10], fill=color)
            draw.text((width - margin_right + 30, legend_y), key.label(), fill=(0, 0, 0), font=font)

        FileHandler.ensure_dir(Path(file_path).parent)
        image.save(file_path, format='PNG')
        logger.info(f'指纹曲线图已保存: {file_path}')
        return file_path