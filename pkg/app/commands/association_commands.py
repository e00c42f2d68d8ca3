"""关联与增强子命令"""
from app.commands import add_association_arguments, add_common_arguments, emit, output_dir, resolve_config
from app.services.association_service import AssociationService
from app.services.sensor_store import SensorStore
from app.services.spatial_index import SurfaceIndex
from app.utils import formats
from app.utils.file_handler import FileHandler
from app.utils.logger import get_logger

logger = get_logger(__name__)


def register(subparsers):
    """注册 associate 和 enrich 子命令"""
    parser = subparsers.add_parser('associate', help='把光束关联到场景表面')
    add_common_arguments(parser)
    add_association_arguments(parser)
    parser.add_argument('--scene', required=True, help='场景JSON文件')
    parser.add_argument('--input', help='光束CSV文件(默认读取数据库)')
    parser.set_defaults(handler=cmd_associate)

    parser = subparsers.add_parser('enrich', help='把关联结果写回光束表并统计对象')
    add_common_arguments(parser)
    parser.add_argument('--scene', required=True, help='场景JSON文件')
    parser.add_argument('--associations', help='关联CSV文件(默认为输出目录下的 associations.csv)')
    parser.add_argument('--keep-existing', dest='keep_existing', action='store_true',
                        help='保留本次未关联光束的旧关联')
    parser.set_defaults(handler=cmd_enrich)


def load_records(args, run_config):
    """从 --input 或数据库读取光束记录, 返回 (记录列表, 无效行数)"""
    if getattr(args, 'input', None):
        return formats.read_beams_csv(args.input)
    store = SensorStore.open(run_config.store)
    return store.read_beams(), 0


def cmd_associate(args, config):
    """批量关联, 输出 associations.csv 和 association_summary.json"""
    run_config = resolve_config(args, config)
    cfg = run_config.association_config()
    scene, _, _ = formats.load_scene(FileHandler.require_file(args.scene))
    records, malformed = load_records(args, run_config)

    index = SurfaceIndex.build(scene.surfaces)
    associations, summary = AssociationService.associate_batch(
        [record.beam for record in records], index, cfg, workers=run_config.workers)
    summary.malformed += malformed

    out = output_dir(run_config)
    formats.write_associations_csv(out / 'associations.csv', associations)
    FileHandler.write_json(out / 'association_summary.json', summary.to_dict())
    emit(summary.to_dict())
    return 0


def cmd_enrich(args, config):
    """
    双向增强

    点级: 排名第一的关联写入数据库光束表；对象级: 输出 objects.csv；另外输出
    增强后的光束表 beams_enriched.csv 和对象观测次数 observations.json。
    """
    run_config = resolve_config(args, config)
    scene, _, _ = formats.load_scene(FileHandler.require_file(args.scene))
    out = output_dir(run_config)
    associations_path = args.associations or (out / 'associations.csv')
    associations = formats.read_associations_csv(associations_path)

    store = SensorStore.open(run_config.store)
    surfaces = scene.surface_map()
    updated = store.update_associations(associations, surfaces, reset=not args.keep_existing)
    records = store.read_beams()

    object_stats = AssociationService.enrich_objects(associations, records, surfaces)
    observations = AssociationService.count_object_observations(records)

    formats.write_objects_csv(out / 'objects.csv', object_stats)
    formats.write_beams_csv(out / 'beams_enriched.csv', records, with_associations=True)
    FileHandler.write_json(out / 'observations.json', {
        'total': observations['total'],
        'per_class': observations['per_class'],
        'observations': [list(triple) for triple in observations['observations']],
    })
    emit({'updated': updated, 'objects': len(object_stats), 'observations': observations['total']})
    return 0
