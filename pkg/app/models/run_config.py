"""命令行运行配置

生效配置按层合并: 配置类默认值 → 场景文件中的传感器参数(仅 simulate) → JSON配置文件 →
命令行参数(非None时覆盖)。
"""
import math
from app.models.association import AssociationConfig
from app.models.fingerprint import BinGrid, FingerprintFilter
from app.models.geometry import GeomParams
from app.models.sensor import SensorModel
from app.utils.errors import ConfigError


def _defaults(config):
    return {
        'store': config.STORE_DIR,
        'output': config.OUTPUT_DIR,
        'workers': None,
        'seed': config.DEFAULT_SEED,
        'epsilon': config.DEFAULT_EPSILON,
        'segment_length': config.DEFAULT_SEGMENT_LENGTH,
        'assoc_radius': config.DEFAULT_ASSOC_RADIUS,
        'max_associations': config.DEFAULT_MAX_ASSOCIATIONS,
        'ordering': config.DEFAULT_ORDERING,
        'range_bin_size': config.DEFAULT_RANGE_BIN_SIZE,
        'range_max': config.DEFAULT_RANGE_MAX,
        'zenith_bins': list(config.DEFAULT_ZENITH_BINS_DEG),
        'range_bin': config.DEFAULT_RANGE_BIN,
        'min_count': config.DEFAULT_MIN_CELL_COUNT,
        'campaigns': None,
        'sensors': None,
        'objects': None,
        'classes': None,
        'functions': None,
        'package_size': config.DEFAULT_PACKAGE_SIZE,
        'platform_id': config.DEFAULT_PLATFORM_ID,
        'sensor_id': config.DEFAULT_SENSOR_ID,
        'campaign_id': config.DEFAULT_CAMPAIGN_ID,
        'channels': config.DEFAULT_CHANNELS,
        'vertical_fov': list(config.DEFAULT_VERTICAL_FOV),
        'angular_step_h': config.DEFAULT_ANGULAR_STEP_H,
        'max_range': config.DEFAULT_MAX_RANGE,
        'rotation_rate': config.DEFAULT_ROTATION_RATE,
        'intensity_scale': config.DEFAULT_INTENSITY_SCALE,
        'range_falloff': config.DEFAULT_RANGE_FALLOFF,
        'noise_std': config.DEFAULT_NOISE_STD,
        'range_noise_std': config.DEFAULT_RANGE_NOISE_STD,
        'wavelength_nm': config.DEFAULT_WAVELENGTH_NM,
        'inlier_threshold': config.DEFAULT_INLIER_THRESHOLD,
        'max_iterations': config.DEFAULT_MAX_ITERATIONS,
        'convergence_tol': config.DEFAULT_CONVERGENCE_TOL,
    }


class RunConfig:
    """一次命令运行的生效配置"""

    def __init__(self, values):
        self.values = dict(values)

    def __getattr__(self, name):
        try:
            return self.__dict__['values'][name]
        except KeyError as e:
            raise AttributeError(name) from e

    @staticmethod
    def keys(config):
        """全部配置键"""
        return set(_defaults(config))

    @staticmethod
    def sensor_values(sensor):
        """把传感器模型转换为配置键值"""
        values = sensor.to_dict()
        values['range_falloff'] = values.pop('range_falloff_exponent')
        return values

    @classmethod
    def resolve(cls, config, file_values=None, flag_values=None, scene_values=None):
        """
        合并各层配置并校验

        Args:
            config: 配置类(DefaultConfig 及其子类)
            file_values: 配置文件中的键值
            flag_values: 命令行参数中的键值, None 表示未指定
            scene_values: 场景文件给出的键值, 优先级低于配置文件

        Raises:
            ConfigError: 出现未知键或取值无效
        """
        values = _defaults(config)
        if scene_values:
            values.update({key: value for key, value in scene_values.items() if key in values})
        if file_values is not None:
            if not isinstance(file_values, dict):
                raise ConfigError('配置文件顶层必须是对象')
            unknown = sorted(set(file_values) - set(values))
            if unknown:
                raise ConfigError(f'配置文件包含未知键: {", ".join(unknown)}')
            values.update(file_values)
        for key, value in (flag_values or {}).items():
            if value is None:
                continue
            if key not in values:
                raise ConfigError(f'未知的配置项: {key}')
            values[key] = value
        run_config = cls(values)
        run_config.validate()
        return run_config

    def validate(self):
        """构造全部参数对象以校验取值, 任一无效即抛出ConfigError"""
        workers = self.values['workers']
        if workers is not None and (isinstance(workers, bool) or not isinstance(workers, int) or workers < 1):
            raise ConfigError(f'workers 必须是正整数: {workers!r}')
        for name in ('seed', 'package_size', 'range_bin', 'min_count', 'max_iterations', 'max_associations'):
            value = self.values[name]
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f'{name} 必须是整数: {value!r}')
        if self.values['package_size'] < 1:
            raise ConfigError(f'package_size 必须 ≥ 1: {self.values["package_size"]}')
        if self.values['min_count'] < 1:
            raise ConfigError(f'min_count 必须 ≥ 1: {self.values["min_count"]}')
        if self.values['max_iterations'] < 1:
            raise ConfigError(f'max_iterations 必须 ≥ 1: {self.values["max_iterations"]}')
        for name in ('inlier_threshold', 'convergence_tol'):
            value = self.values[name]
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value) or value <= 0:
                raise ConfigError(f'{name} 必须为正: {value!r}')

        try:
            self.association_config()
            grid = self.bin_grid()
            self.sensor_model()
            self.fingerprint_filter()
        except (TypeError, ValueError) as e:
            raise ConfigError(f'配置值类型无效: {e}') from e
        if not 0 <= self.values['range_bin'] < grid.range_bin_count:
            raise ConfigError(f'range_bin 超出网格: {self.values["range_bin"]}, 距离分箱数 {grid.range_bin_count}')

    def geom_params(self):
        return GeomParams(
            epsilon=self.values['epsilon'],
            assoc_radius=self.values['assoc_radius'],
            segment_length=self.values['segment_length'],
        )

    def association_config(self):
        return AssociationConfig(self.geom_params(), self.values['max_associations'], self.values['ordering'])

    def bin_grid(self):
        return BinGrid.from_settings(self.values['range_bin_size'], self.values['range_max'], self.values['zenith_bins'])

    def sensor_model(self):
        return SensorModel(
            sensor_id=self.values['sensor_id'],
            channels=self.values['channels'],
            vertical_fov=self.values['vertical_fov'],
            angular_step_h=self.values['angular_step_h'],
            max_range=self.values['max_range'],
            rotation_rate=self.values['rotation_rate'],
            intensity_scale=self.values['intensity_scale'],
            range_falloff_exponent=self.values['range_falloff'],
            noise_std=self.values['noise_std'],
            range_noise_std=self.values['range_noise_std'],
            wavelength_nm=self.values['wavelength_nm'],
        )

    def fingerprint_filter(self):
        """过滤窗口取分箱网格的范围"""
        grid = self.bin_grid()
        return FingerprintFilter(
            campaigns=self.values['campaigns'],
            sensors=self.values['sensors'],
            objects=self.values['objects'],
            classes=self.values['classes'],
            functions=self.values['functions'],
            range_window=(float(grid.range_edges[0]), float(grid.range_edges[-1])),
            zenith_window=(float(grid.zenith_edges[0]), float(grid.zenith_edges[-1])),
        )

    def to_dict(self):
        return dict(sorted(self.values.items()))
