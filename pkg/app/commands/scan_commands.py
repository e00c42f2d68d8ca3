"""仿真与导入子命令"""
from app.commands import add_common_arguments, emit, output_dir, resolve_config
from app.models.registry import Campaign, Platform, Sensor
from app.models.run_config import RunConfig
from app.services.scan_simulator import ScanSimulator
from app.services.sensor_store import SensorStore
from app.utils.errors import ConfigError
from app.utils.file_handler import FileHandler
from app.utils import formats
from app.utils.logger import get_logger

logger = get_logger(__name__)

PRESETS = ('spectralon',)


def register(subparsers):
    """注册 simulate 和 ingest 子命令"""
    parser = subparsers.add_parser('simulate', help='仿真激光雷达扫描')
    add_common_arguments(parser)
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--scene', help='场景JSON文件(需包含 trajectory 段)')
    source.add_argument('--preset', choices=PRESETS, help='内置场景')
    parser.add_argument('--sensor-id', dest='sensor_id', help='传感器ID')
    parser.add_argument('--campaign-id', dest='campaign_id', help='采集活动ID')
    parser.add_argument('--channels', type=int, help='通道数')
    parser.add_argument('--angular-step', dest='angular_step_h', type=float, help='水平角分辨率(度)')
    parser.add_argument('--max-range', dest='max_range', type=float, help='最大量程(米)')
    parser.add_argument('--intensity-scale', dest='intensity_scale', type=float, help='强度比例系数')
    parser.add_argument('--range-falloff', dest='range_falloff', type=float, help='距离衰减指数')
    parser.add_argument('--noise-std', dest='noise_std', type=float, help='强度噪声标准差')
    parser.add_argument('--range-noise-std', dest='range_noise_std', type=float, help='距离噪声标准差(米)')
    parser.set_defaults(handler=cmd_simulate)

    parser = subparsers.add_parser('ingest', help='把光束表导入传感器数据库')
    add_common_arguments(parser)
    parser.add_argument('--input', required=True, help='光束CSV文件')
    parser.add_argument('--package-size', dest='package_size', type=int, help='每个数据包的光束数')
    parser.add_argument('--platform-id', dest='platform_id', help='自动登记时使用的平台ID')
    parser.add_argument('--auto-register', action='store_true', help='自动登记输入中出现的传感器和采集活动')
    parser.set_defaults(handler=cmd_ingest)


def cmd_simulate(args, config):
    """仿真扫描, 输出 beams.csv、ground_truth.csv 和 scene.json"""
    scene_values = None
    if args.preset == 'spectralon':
        scene, trajectory = ScanSimulator.spectralon_scene()
    else:
        scene, trajectory, scene_sensor = formats.load_scene(FileHandler.require_file(args.scene))
        if trajectory is None:
            raise ConfigError(f'场景文件缺少 trajectory 段: {args.scene}')
        if scene_sensor is not None:
            scene_values = RunConfig.sensor_values(scene_sensor)

    # 场景中的传感器参数作为低优先级配置层, 命令行参数可覆盖
    run_config = resolve_config(args, config, scene_values)
    sensor = run_config.sensor_model()

    scan = ScanSimulator.simulate_scan(scene, sensor, trajectory, seed=run_config.seed,
                                       campaign_id=run_config.campaign_id, workers=run_config.workers)

    out = output_dir(run_config)
    formats.write_beams_csv(out / 'beams.csv', scan.beams)
    formats.write_ground_truth_csv(out / 'ground_truth.csv', scan.ground_truth)
    formats.save_scene(out / 'scene.json', scene, trajectory, sensor)
    emit({'beams': len(scan.beams), 'poses': scan.poses_count, 'surfaces': len(scene), 'output': str(out)})
    return 0


def cmd_ingest(args, config):
    """导入光束CSV"""
    run_config = resolve_config(args, config)
    records, malformed = formats.read_beams_csv(args.input)
    beams = [record.beam for record in records]

    store = SensorStore.create(run_config.store)
    if args.auto_register:
        _auto_register(store, beams, run_config.platform_id)
    packages = store.ingest(beams, run_config.package_size)
    emit({
        'packages': [p.id for p in packages],
        'beams': sum(p.beam_count for p in packages),
        'malformed': malformed,
        'store': str(store.root),
    })
    return 0


def _auto_register(store, beams, platform_id):
    known_platforms = {p.id for p in store.platforms()}
    if platform_id not in known_platforms:
        store.register_platform(Platform(platform_id))
    known_sensors = {s.id for s in store.sensors()}
    known_campaigns = {c.id for c in store.campaigns()}
    for sensor_id in sorted({b.sensor_id for b in beams} - known_sensors):
        store.register_sensor(Sensor(sensor_id, platform_id))
    for campaign_id in sorted({b.campaign_id for b in beams} - known_campaigns):
        store.register_campaign(Campaign(campaign_id, platform_id))
