"""基于文件的列式传感器数据库

目录结构:

    manifest.json          版本、字符串表、平台/传感器/采集活动登记和数据包目录
    packages/00000001.bin  列式数据包文件(见 app.utils.column_store)
    .lock                  写入锁(存在即表示有写入进程)

读取不加锁；写入(登记、导入、更新关联)必须持有 .lock。数据包文件和清单都
先写临时文件再重命名，进程中途被杀不会破坏已提交的数据包。
"""
import os
from contextlib import contextmanager
from pathlib import Path
import numpy as np
from app.models.beam import Beam, BeamRecord
from app.models.registry import Campaign, Package, Platform, Sensor
from app.utils.column_store import decode_columns, encode_columns
from app.utils.errors import (
    ConfigError,
    DataIntegrityError,
    DuplicateIdError,
    MissingInputError,
    StoreBusyError,
    UnknownReferenceError,
)
from app.utils.file_handler import FileHandler
from app.utils.logger import get_logger

logger = get_logger(__name__)

STORE_VERSION = 1

# 字符串列的空值
NULL_ID = 0xFFFFFFFF

BEAM_SCHEMA = (
    ('beam_id', '<u8'),
    ('timestamp_ns', '<i8'),
    ('sensor_id', '<u4'),
    ('campaign_id', '<u4'),
    ('ox', '<f8'),
    ('oy', '<f8'),
    ('oz', '<f8'),
    ('dx', '<f8'),
    ('dy', '<f8'),
    ('dz', '<f8'),
    ('range', '<f8'),
    ('intensity', '<f4'),
)

ASSOCIATION_SCHEMA = (
    ('assoc_flag', 'u1'),
    ('surface_id', '<u4'),
    ('object_id', '<u4'),
    ('class_name', '<u4'),
    ('function', '<u4'),
    ('zenith', '<f8'),
    ('azimuth', '<f8'),
    ('signed_dist', '<f8'),
    ('min_dist', '<f8'),
)

PACKAGE_SCHEMA = BEAM_SCHEMA + ASSOCIATION_SCHEMA

_STRING_COLUMNS = ('surface_id', 'object_id', 'class_name', 'function')
_FLOAT_COLUMNS = ('zenith', 'azimuth', 'signed_dist', 'min_dist')


def _empty_association_columns(rows):
    columns = {'assoc_flag': np.zeros(rows, dtype=np.uint8)}
    for name in _STRING_COLUMNS:
        columns[name] = np.full(rows, NULL_ID, dtype=np.uint32)
    for name in _FLOAT_COLUMNS:
        columns[name] = np.full(rows, np.nan)
    return columns


class SensorStore:
    """传感器数据库: 登记表、数据包与光束表"""

    MANIFEST_NAME = 'manifest.json'
    LOCK_NAME = '.lock'
    PACKAGE_DIR = 'packages'

    def __init__(self, root, manifest):
        self.root = Path(root)
        self._manifest = manifest
        self._string_index = {s: i for i, s in enumerate(manifest['strings'])}

    # ------------------------------------------------------------------
    # 打开与锁
    # ------------------------------------------------------------------

    @classmethod
    def create(cls, root):
        """
        创建存储目录; 已存在时直接打开

        Returns:
            SensorStore
        """
        root = Path(root)
        if (root / cls.MANIFEST_NAME).is_file():
            return cls.open(root)
        FileHandler.ensure_dir(root / cls.PACKAGE_DIR)
        manifest = {
            'version': STORE_VERSION,
            'strings': [],
            'platforms': {},
            'sensors': {},
            'campaigns': {},
            'packages': [],
            'next_package_id': 1,
        }
        FileHandler.write_json(root / cls.MANIFEST_NAME, manifest)
        logger.info(f'创建传感器数据库: {root}')
        return cls(root, manifest)

    @classmethod
    def open(cls, root):
        """
        打开已有存储

        Raises:
            MissingInputError: 目录或清单不存在
            DataIntegrityError: 清单版本不支持
        """
        root = FileHandler.require_dir(root)
        manifest_path = root / cls.MANIFEST_NAME
        if not manifest_path.is_file():
            raise MissingInputError(f'目录不是传感器数据库(缺少清单): {root}')
        manifest = FileHandler.read_json(manifest_path)
        if manifest.get('version') != STORE_VERSION:
            raise DataIntegrityError(f'不支持的存储版本: {manifest.get("version")!r}')
        return cls(root, manifest)

    @property
    def lock_path(self):
        return self.root / self.LOCK_NAME

    @contextmanager
    def writer(self):
        """
        获取写入锁

        Raises:
            StoreBusyError: 锁文件已存在
        """
        try:
            fd = os.open(self.lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError as e:
            raise StoreBusyError(f'存储正被其他进程写入: {self.lock_path}') from e
        try:
            os.write(fd, str(os.getpid()).encode('ascii'))
            os.close(fd)
            # 其他进程可能在本进程打开后提交过
            self._reload()
            yield self
        finally:
            try:
                os.remove(self.lock_path)
            except FileNotFoundError:
                logger.warning(f'写入锁已被移除: {self.lock_path}')

    def _reload(self):
        self._manifest = FileHandler.read_json(self.root / self.MANIFEST_NAME)
        self._string_index = {s: i for i, s in enumerate(self._manifest['strings'])}

    def _save_manifest(self):
        FileHandler.write_json(self.root / self.MANIFEST_NAME, self._manifest)

    # ------------------------------------------------------------------
    # 字符串表
    # ------------------------------------------------------------------

    def _intern(self, value):
        value = str(value)
        index = self._string_index.get(value)
        if index is None:
            index = len(self._manifest['strings'])
            if index >= NULL_ID:
                raise DataIntegrityError('字符串表已满')
            self._manifest['strings'].append(value)
            self._string_index[value] = index
        return index

    def string(self, index):
        """字符串ID → 字符串, 空值返回None"""
        index = int(index)
        if index == NULL_ID:
            return None
        try:
            return self._manifest['strings'][index]
        except IndexError as e:
            raise DataIntegrityError(f'字符串ID越界: {index}') from e

    # ------------------------------------------------------------------
    # 登记
    # ------------------------------------------------------------------

    def _register(self, table, entity, label):
        if entity.id in self._manifest[table]:
            raise DuplicateIdError(f'{label}已登记: {entity.id}', duplicate_id=entity.id)
        with self.writer():
            if entity.id in self._manifest[table]:
                raise DuplicateIdError(f'{label}已登记: {entity.id}', duplicate_id=entity.id)
            self._manifest[table][entity.id] = entity.to_dict()
            self._save_manifest()
        logger.info(f'登记{label}: {entity.id}')
        return entity

    def register_platform(self, platform):
        """登记平台"""
        return self._register('platforms', platform, '平台')

    def register_sensor(self, sensor):
        """
        登记传感器

        Raises:
            UnknownReferenceError: 平台未登记
        """
        if sensor.platform_id not in self._manifest['platforms']:
            raise UnknownReferenceError(f'传感器 {sensor.id} 引用了未登记的平台: {sensor.platform_id}')
        return self._register('sensors', sensor, '传感器')

    def register_campaign(self, campaign):
        """
        登记采集活动

        Raises:
            UnknownReferenceError: 平台未登记
        """
        if campaign.platform_id not in self._manifest['platforms']:
            raise UnknownReferenceError(f'采集活动 {campaign.id} 引用了未登记的平台: {campaign.platform_id}')
        return self._register('campaigns', campaign, '采集活动')

    def platforms(self):
        return [Platform.from_dict(d) for _, d in sorted(self._manifest['platforms'].items())]

    def sensors(self):
        return [Sensor.from_dict(d) for _, d in sorted(self._manifest['sensors'].items())]

    def campaigns(self):
        return [Campaign.from_dict(d) for _, d in sorted(self._manifest['campaigns'].items())]

    def get_sensor(self, sensor_id):
        data = self._manifest['sensors'].get(sensor_id)
        return Sensor.from_dict(data) if data else None

    def get_campaign(self, campaign_id):
        data = self._manifest['campaigns'].get(campaign_id)
        return Campaign.from_dict(data) if data else None

    # ------------------------------------------------------------------
    # 数据包
    # ------------------------------------------------------------------

    def packages(self):
        """全部数据包, 按ID排序"""
        return [Package.from_dict(d) for d in sorted(self._manifest['packages'], key=lambda d: d['id'])]

    def get_package(self, package_id):
        for data in self._manifest['packages']:
            if data['id'] == package_id:
                return Package.from_dict(data)
        raise UnknownReferenceError(f'数据包不存在: {package_id}')

    def beam_count(self):
        return sum(d['beam_count'] for d in self._manifest['packages'])

    def _package_path(self, package):
        return self.root / self.PACKAGE_DIR / package.file_name

    def _read_package(self, package, names=None):
        path = self._package_path(package)
        if not path.is_file():
            raise DataIntegrityError(f'数据包文件缺失: {path}')
        rows, columns = decode_columns(path.read_bytes(), names)
        if rows != package.beam_count:
            raise DataIntegrityError(f'数据包 {package.id} 行数({rows})与清单({package.beam_count})不一致')
        return columns

    def _write_package(self, package, columns):
        data = encode_columns(columns, PACKAGE_SCHEMA)
        FileHandler.atomic_write_bytes(self._package_path(package), data)
        return len(data)

    def _existing_beam_ids(self):
        ids = [self._read_package(p, ['beam_id'])['beam_id'] for p in self.packages()]
        return set(np.concatenate(ids).tolist()) if ids else set()

    def ingest(self, beams, package_size):
        """
        导入光束

        光束按 (采集活动, 传感器) 分组, 组内按 (时间戳, beam_id) 排序后切分为
        package_size 条一包(最后一包可以更小)。传感器安装位姿非单位变换时,
        光束先从传感器坐标系变换到世界坐标系。

        Args:
            beams: Beam 序列
            package_size: 每包光束数(≥ 1)

        Returns:
            新建的 Package 列表

        Raises:
            ConfigError: package_size 无效
            UnknownReferenceError: 传感器或采集活动未登记
            DuplicateIdError: beam_id 重复
        """
        if isinstance(package_size, bool) or not isinstance(package_size, int) or package_size < 1:
            raise ConfigError(f'package_size 必须是 ≥ 1 的整数: {package_size!r}')

        with self.writer():
            groups = {}
            seen = self._existing_beam_ids()
            for beam in beams:
                if beam.beam_id in seen:
                    raise DuplicateIdError(f'beam_id 重复: {beam.beam_id}', duplicate_id=beam.beam_id)
                seen.add(beam.beam_id)
                groups.setdefault((beam.campaign_id, beam.sensor_id), []).append(beam)

            mounts = {}
            for campaign_id, sensor_id in groups:
                sensor = self.get_sensor(sensor_id)
                if sensor is None:
                    raise UnknownReferenceError(f'光束引用了未登记的传感器: {sensor_id}')
                campaign = self.get_campaign(campaign_id)
                if campaign is None:
                    raise UnknownReferenceError(f'光束引用了未登记的采集活动: {campaign_id}')
                if campaign.platform_id != sensor.platform_id:
                    raise DataIntegrityError(
                        f'传感器 {sensor_id} 与采集活动 {campaign_id} 不属于同一平台')
                mounts[sensor_id] = None if sensor.mount.is_identity() else sensor.mount

            batches = []
            for key in sorted(groups):
                campaign_id, sensor_id = key
                group = sorted(groups[key], key=lambda b: (b.timestamp_ns, b.beam_id))
                for start in range(0, len(group), package_size):
                    batches.append(self._beam_columns(group[start:start + package_size],
                                                      campaign_id, sensor_id, mounts[sensor_id]))
            # 先提交字符串表, 清单始终不引用缺失的字符串
            self._save_manifest()

            created = []
            for campaign_id, sensor_id, columns in batches:
                package_id = self._manifest['next_package_id']
                self._manifest['next_package_id'] = package_id + 1
                origins = np.column_stack((columns['ox'], columns['oy'], columns['oz']))
                directions = np.column_stack((columns['dx'], columns['dy'], columns['dz']))
                points = origins + columns['range'][:, None] * directions
                package = Package(
                    id=package_id,
                    campaign_id=campaign_id,
                    sensor_id=sensor_id,
                    envelope=Package.envelope_of(origins, points),
                    beam_count=len(columns['beam_id']),
                    byte_size=0,
                    file_name=f'{package_id:08d}.bin',
                    time_range=(int(columns['timestamp_ns'].min()), int(columns['timestamp_ns'].max())),
                )
                package.byte_size = self._write_package(package, columns)
                self._manifest['packages'].append(package.to_dict())
                created.append(package)
            self._save_manifest()

        logger.info(f'导入完成: 数据包数={len(created)}, 光束数={sum(p.beam_count for p in created)}')
        return created

    def _beam_columns(self, beams, campaign_id, sensor_id, mount):
        origins = np.array([b.origin for b in beams], dtype=np.float64).reshape(-1, 3)
        directions = np.array([b.direction for b in beams], dtype=np.float64).reshape(-1, 3)
        if mount is not None:
            origins = mount.apply(origins)
            directions = mount.apply_direction(directions)
        rows = len(beams)
        columns = {
            'beam_id': np.array([b.beam_id for b in beams], dtype=np.uint64),
            'timestamp_ns': np.array([b.timestamp_ns for b in beams], dtype=np.int64),
            'sensor_id': np.full(rows, self._intern(sensor_id), dtype=np.uint32),
            'campaign_id': np.full(rows, self._intern(campaign_id), dtype=np.uint32),
            'ox': origins[:, 0], 'oy': origins[:, 1], 'oz': origins[:, 2],
            'dx': directions[:, 0], 'dy': directions[:, 1], 'dz': directions[:, 2],
            'range': np.array([b.range for b in beams], dtype=np.float64),
            'intensity': np.array([b.intensity for b in beams], dtype=np.float32),
        }
        columns.update(_empty_association_columns(rows))
        return campaign_id, sensor_id, columns

    def query_by_envelope(self, box):
        """返回包络与查询盒相交的数据包ID(升序)"""
        return sorted(d['id'] for d in self._manifest['packages']
                      if Package.from_dict(d).envelope.intersects(box))

    def read_columns(self, package_ids=None, names=None):
        """
        按列读取(快速路径), 字符串列保持为字符串ID

        Args:
            package_ids: 数据包ID列表, 默认全部
            names: 列名列表, 默认全部

        Returns:
            列名 → 按数据包顺序拼接的numpy数组
        """
        names = list(names) if names is not None else [name for name, _ in PACKAGE_SCHEMA]
        packages = self._select(package_ids)
        parts = {name: [] for name in names}
        for package in packages:
            columns = self._read_package(package, names)
            for name in names:
                parts[name].append(columns[name])
        dtypes = dict(PACKAGE_SCHEMA)
        return {name: (np.concatenate(parts[name]) if parts[name] else np.empty(0, dtype=dtypes.get(name, 'f8')))
                for name in names}

    def _select(self, package_ids):
        if package_ids is None:
            return self.packages()
        return [self.get_package(int(package_id)) for package_id in package_ids]

    def read_beams(self, package_ids=None):
        """
        读取光束记录

        Args:
            package_ids: 数据包ID列表, 默认全部

        Returns:
            BeamRecord 列表, 按数据包顺序、包内行顺序
        """
        records = []
        for package in self._select(package_ids):
            columns = self._read_package(package)
            for row in range(package.beam_count):
                records.append(self._record_at(columns, row))
        return records

    def _record_at(self, columns, row):
        beam = Beam(
            beam_id=int(columns['beam_id'][row]),
            origin=(columns['ox'][row], columns['oy'][row], columns['oz'][row]),
            direction=(columns['dx'][row], columns['dy'][row], columns['dz'][row]),
            range=float(columns['range'][row]),
            intensity=float(columns['intensity'][row]),
            timestamp_ns=int(columns['timestamp_ns'][row]),
            sensor_id=self.string(columns['sensor_id'][row]),
            campaign_id=self.string(columns['campaign_id'][row]),
        )
        if not columns['assoc_flag'][row]:
            return BeamRecord(beam)
        return BeamRecord(
            beam,
            surface_id=self.string(columns['surface_id'][row]),
            object_id=self.string(columns['object_id'][row]),
            class_name=self.string(columns['class_name'][row]),
            function=self.string(columns['function'][row]),
            zenith=float(columns['zenith'][row]),
            azimuth=float(columns['azimuth'][row]),
            signed_dist=float(columns['signed_dist'][row]),
            min_dist=float(columns['min_dist'][row]),
        )

    def update_associations(self, associations, surfaces, reset=True):
        """
        把排名第一的关联写入光束表的关联列

        每个数据包写新文件后重命名替换，光束列保持不变。

        Args:
            associations: 关联序列
            surfaces: surface_id → Surface 映射
            reset: 为True时清除未出现在本次关联中的光束的旧关联

        Returns:
            写入关联的光束数

        Raises:
            UnknownReferenceError: 关联引用了不存在的表面或光束
            DataIntegrityError: 同一光束有多个排名第一的关联
        """
        primary = {}
        for association in associations:
            if association.rank != 1:
                continue
            if association.beam_id in primary:
                raise DataIntegrityError(f'光束 {association.beam_id} 有多个排名第一的关联')
            if surfaces.get(association.surface_id) is None:
                raise UnknownReferenceError(f'关联引用了不存在的表面: {association.surface_id}')
            primary[association.beam_id] = association

        with self.writer():
            missing = sorted(set(primary) - self._existing_beam_ids())
            if missing:
                raise UnknownReferenceError(f'关联引用了不存在的光束: {missing[:5]}')

            labels = {}
            for association in primary.values():
                surface = surfaces.get(association.surface_id)
                labels[surface.id] = (
                    self._intern(surface.id),
                    self._intern(surface.object_id),
                    self._intern(surface.class_name),
                    NULL_ID if surface.function is None else self._intern(surface.function),
                )
            self._save_manifest()

            updated = 0
            entries = {d['id']: d for d in self._manifest['packages']}
            for package in self.packages():
                columns = self._read_package(package)
                ids = columns['beam_id']
                hit = np.array([int(i) in primary for i in ids], dtype=bool)
                if not reset and not np.any(hit):
                    continue
                if reset:
                    columns.update(_empty_association_columns(len(ids)))
                for row in np.nonzero(hit)[0]:
                    association = primary[int(ids[row])]
                    surface_idx, object_idx, class_idx, function_idx = labels[association.surface_id]
                    columns['assoc_flag'][row] = 1
                    columns['surface_id'][row] = surface_idx
                    columns['object_id'][row] = object_idx
                    columns['class_name'][row] = class_idx
                    columns['function'][row] = function_idx
                    columns['zenith'][row] = association.zenith
                    columns['azimuth'][row] = association.azimuth
                    columns['signed_dist'][row] = association.signed_dist
                    columns['min_dist'][row] = association.min_dist
                package.byte_size = self._write_package(package, columns)
                package.associated = bool(np.any(columns['assoc_flag']))
                entries[package.id].update(package.to_dict())
                updated += int(np.count_nonzero(hit))
            self._save_manifest()

        logger.info(f'关联列更新完成: 光束数={updated}, 重置={reset}')
        return updated

    def summary(self):
        """存储概况"""
        return {
            'root': str(self.root),
            'platforms': len(self._manifest['platforms']),
            'sensors': len(self._manifest['sensors']),
            'campaigns': len(self._manifest['campaigns']),
            'packages': len(self._manifest['packages']),
            'beams': self.beam_count(),
            'associated_packages': sum(1 for d in self._manifest['packages'] if d.get('associated')),
        }
