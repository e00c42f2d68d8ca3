"""默认配置"""
import os
from pathlib import Path

# 项目根目录
BASE_DIR = Path(__file__).parent.parent


class DefaultConfig:
    """默认配置类"""

    DEBUG = False

    # 文件路径配置
    DATA_DIR = os.path.join(BASE_DIR, 'data')
    STORE_DIR = os.environ.get('B2S_STORE_DIR') or os.path.join(DATA_DIR, 'store')
    OUTPUT_DIR = os.path.join(BASE_DIR, 'output')
    LOG_DIR = os.environ.get('B2S_LOG_DIR') or os.path.join(BASE_DIR, 'logs')

    # 关联参数默认值
    DEFAULT_EPSILON = 1e-6
    DEFAULT_SEGMENT_LENGTH = 1.0  # 米
    DEFAULT_ASSOC_RADIUS = 0.05  # 米
    DEFAULT_MAX_ASSOCIATIONS = 1
    DEFAULT_ORDERING = 'min_signed_distance'

    # 指纹参数默认值
    DEFAULT_RANGE_BIN_SIZE = 15.0  # 米
    DEFAULT_RANGE_MAX = 15.0  # 米
    DEFAULT_ZENITH_BINS_DEG = (0.0, 20.0, 40.0, 60.0, 90.0)
    DEFAULT_RANGE_BIN = 0
    DEFAULT_MIN_CELL_COUNT = 5

    # 扫描仿真默认值 (VLP-16)
    DEFAULT_SENSOR_ID = 'vlp16'
    DEFAULT_CAMPAIGN_ID = 'campaign-1'
    DEFAULT_CHANNELS = 16
    DEFAULT_VERTICAL_FOV = (-15.0, 15.0)  # 度
    DEFAULT_ANGULAR_STEP_H = 0.2  # 度
    DEFAULT_MAX_RANGE = 100.0  # 米
    DEFAULT_ROTATION_RATE = 10.0  # Hz
    DEFAULT_INTENSITY_SCALE = 100.0
    DEFAULT_RANGE_FALLOFF = 0.0
    DEFAULT_NOISE_STD = 0.0
    DEFAULT_RANGE_NOISE_STD = 0.0
    DEFAULT_WAVELENGTH_NM = 903.0
    DEFAULT_SEED = 42

    # 配准参数默认值
    DEFAULT_INLIER_THRESHOLD = 1.0  # 米
    DEFAULT_MAX_ITERATIONS = 50
    DEFAULT_CONVERGENCE_TOL = 1e-9

    # 存储参数
    DEFAULT_PACKAGE_SIZE = 100000
    DEFAULT_PLATFORM_ID = 'vehicle'

    # 任务处理配置
    MAX_WORKER_COUNT = 16  # 最大线程数
    BATCH_CHUNK_SIZE = 5000  # 单个批次的光束数

    # 日志配置
    LOG_LEVEL = 'INFO'
    LOG_MAX_BYTES = 10 * 1024 * 1024  # 单个日志文件最大10MB
    LOG_BACKUP_COUNT = 5  # 保留5个备份
