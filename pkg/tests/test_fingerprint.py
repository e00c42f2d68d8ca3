"""辐射指纹提取与比较测试"""
import math

import pytest

from conftest import make_beam, square_x
from app.models.beam import BeamRecord
from app.models.fingerprint import BinGrid, CellStats, Fingerprint, FingerprintFilter, FingerprintKey
from app.models.sensor import SensorModel, Trajectory
from app.models.surface import Material, Scene
from app.services.association_service import AssociationService
from app.services.fingerprint_service import FingerprintService
from app.services.scan_simulator import ScanSimulator
from app.services.spatial_index import SurfaceIndex
from app.utils.errors import ConfigError, CoverageError, EmptyPairSetError, UnknownReferenceError


def record(beam_id, zenith_deg, intensity=50.0, range=5.0, campaign_id='c1', sensor_id='s1', object_id='o1',
           class_name='WallSurface', function='facade'):
    beam = make_beam(beam_id, range=range, intensity=intensity, sensor_id=sensor_id, campaign_id=campaign_id)
    return BeamRecord(beam, surface_id=f'{object_id}-s', object_id=object_id, class_name=class_name,
                      function=function, zenith=math.radians(zenith_deg), azimuth=0.0, signed_dist=0.0,
                      min_dist=0.0)


def fingerprint(object_id, q3_values, class_name='WallSurface', function='facade', count=5, campaign_id='c1'):
    """直接构造单距离分箱的指纹"""
    cells = [[CellStats(count=count, mean=q, std=0.0, median=q, q1=q, q3=q) for q in q3_values]]
    key = FingerprintKey(campaign_id, 's1', object_id)
    return Fingerprint(key, BinGrid.default(), cells, class_name, function)


def entry(matrix, row_label, column_label):
    return matrix.values[matrix.labels.index(row_label)][matrix.labels.index(column_label)]


class TestBinGrid:
    def test_default_grid(self):
        grid = BinGrid.default()
        assert grid.range_edges.tolist() == [0.0, 15.0]
        assert grid.zenith_bin_count == 4
        assert grid.zenith_edges[-1] == math.pi / 2
        assert grid.zenith_labels()[0] == '[0°, 20°)'

    def test_partial_last_range_bin(self):
        grid = BinGrid.from_settings(10.0, 25.0, (0, 45, 90))
        assert grid.range_edges.tolist() == [0.0, 10.0, 20.0, 25.0]

    def test_bins_are_half_open(self):
        grid = BinGrid.default()
        assert int(grid.zenith_bin_of(math.radians(20.0))) == 1
        assert int(grid.zenith_bin_of(math.radians(19.999))) == 0
        assert int(grid.range_bin_of(15.0)) == -1
        assert int(grid.range_bin_of(0.0)) == 0

    def test_rejects_unsorted_edges(self):
        with pytest.raises(ConfigError):
            BinGrid([0.0, 15.0], [0.0, 0.7, 0.3])

    def test_rejects_zenith_beyond_right_angle(self):
        with pytest.raises(ConfigError):
            BinGrid([0.0, 15.0], [0.0, 2.0])


class TestFingerprintFilter:
    def test_empty_selector_is_rejected(self):
        with pytest.raises(ConfigError):
            FingerprintFilter(classes=[])

    def test_inverted_window_is_rejected(self):
        with pytest.raises(ConfigError):
            FingerprintFilter(range_window=(10.0, 5.0))

    def test_selectors(self):
        flt = FingerprintFilter(classes=['RoofSurface'])
        assert flt.rejects(record(1, 10))
        assert not flt.rejects(record(2, 10, class_name='RoofSurface'))

    def test_function_selector_rejects_missing_label(self):
        flt = FingerprintFilter(functions=['facade'])
        assert flt.rejects(record(1, 10, function=None))


# ---------------------------------------------------------------------------
# 提取
# ---------------------------------------------------------------------------

class TestExtraction:
    def test_single_beam_lands_in_one_cell(self):
        fingerprints, summary = FingerprintService.extract_fingerprints([record(1, 10, intensity=42.0)])
        assert list(fingerprints) == [FingerprintKey('c1', 's1', 'o1')]
        fp = fingerprints[FingerprintKey('c1', 's1', 'o1')]
        assert fp.cells[0][0].count == 1
        assert fp.cells[0][0].q3 == 42.0
        assert [cell.count for cell in fp.cells[0][1:]] == [0, 0, 0]
        assert fp.cells[0][1].q3 is None
        assert fp.class_name == 'WallSurface'
        assert summary.counted == 1

    def test_edge_value_goes_to_upper_bin(self):
        fingerprints, _ = FingerprintService.extract_fingerprints([record(1, 20)])
        fp = next(iter(fingerprints.values()))
        assert [cell.count for cell in fp.cells[0]] == [0, 1, 0, 0]

    def test_cell_statistics(self):
        records = [record(i, 30, intensity=10.0 * i) for i in range(1, 6)]
        fingerprints, _ = FingerprintService.extract_fingerprints(records)
        cell = next(iter(fingerprints.values())).cells[0][1]
        assert cell.count == 5
        assert cell.mean == pytest.approx(30.0)
        assert cell.median == pytest.approx(30.0)
        assert cell.q1 == pytest.approx(20.0)
        assert cell.q3 == pytest.approx(40.0)

    def test_fingerprints_are_keyed_by_campaign_sensor_object(self):
        records = [
            record(1, 10),
            record(2, 10, campaign_id='c2'),
            record(3, 10, sensor_id='s2'),
            record(4, 10, object_id='o2'),
            record(5, 10),
        ]
        fingerprints, _ = FingerprintService.extract_fingerprints(records)
        assert list(fingerprints) == sorted(fingerprints)
        assert len(fingerprints) == 4
        assert fingerprints[FingerprintKey('c1', 's1', 'o1')].total_count == 2

    def test_summary_partitions_input(self):
        records = [
            record(1, 10),
            BeamRecord(make_beam(2)),
            record(3, 10, class_name='RoofSurface'),
            record(4, 10, range=20.0),
            record(5, 89.0),
        ]
        flt = FingerprintFilter(classes=['WallSurface'], range_window=(0.0, 100.0))
        _, summary = FingerprintService.extract_fingerprints(records, record_filter=flt)
        assert summary.input == 5
        assert summary.counted == 2
        assert summary.dropped == {'unassociated': 1, 'filtered': 1, 'outside_grid': 1}
        assert summary.counted + sum(summary.dropped.values()) == summary.input

    def test_beyond_default_range_is_filtered(self):
        _, summary = FingerprintService.extract_fingerprints([record(1, 10, range=15.0)])
        assert summary.dropped['filtered'] == 1
        assert summary.counted == 0

    def test_result_independent_of_chunking(self, rng):
        records = []
        for i in range(300):
            records.append(record(i, float(rng.uniform(0, 89)), intensity=float(rng.uniform(0, 255)),
                                  range=float(rng.uniform(1, 14)), object_id=f'o{i % 3}',
                                  campaign_id=f'c{i % 2}'))
        serial, serial_summary = FingerprintService.extract_fingerprints(records, workers=1)
        parallel, parallel_summary = FingerprintService.extract_fingerprints(
            list(reversed(records)), workers=4, chunk_size=17)
        assert [fp.to_dict() for fp in serial.values()] == [fp.to_dict() for fp in parallel.values()]
        assert serial_summary.to_dict() == parallel_summary.to_dict()


# ---------------------------------------------------------------------------
# 距离
# ---------------------------------------------------------------------------

class TestDistance:
    def test_identical_profiles(self):
        a = fingerprint('o1', [10, 20, 30, 40])
        assert FingerprintService.dist_q3(a, a) == 0.0

    def test_root_mean_square(self):
        a = fingerprint('o1', [10, 20, 30, 40])
        b = fingerprint('o2', [11, 21, 33, 43])
        assert FingerprintService.dist_q3(a, b) == pytest.approx(math.sqrt(5.0))
        assert FingerprintService.dist_q3(b, a) == pytest.approx(math.sqrt(5.0))

    def test_constant_offset(self):
        a = fingerprint('o1', [10, 20, 30, 40])
        b = fingerprint('o2', [14, 24, 34, 44])
        assert FingerprintService.dist_q3(a, b) == pytest.approx(4.0)

    def test_incomplete_coverage(self):
        a = fingerprint('o1', [10, 20, 30, 40])
        b = fingerprint('o2', [10, 20, 30, 40], count=4)
        with pytest.raises(CoverageError) as excinfo:
            FingerprintService.dist_q3(a, b, min_count=5)
        assert len(excinfo.value.missing) == 4
        assert FingerprintService.dist_q3(a, b, min_count=4) == 0.0

    def test_range_bin_out_of_bounds(self):
        a = fingerprint('o1', [10, 20, 30, 40])
        with pytest.raises(ConfigError):
            FingerprintService.dist_q3(a, a, range_bin=3)

    def test_grid_mismatch(self):
        a = fingerprint('o1', [10, 20, 30, 40])
        b = Fingerprint(FingerprintKey('c1', 's1', 'o2'), BinGrid([0.0, 10.0], [0.0, 0.5, 1.0, 1.2, 1.5]),
                        a.cells, 'WallSurface')
        with pytest.raises(ConfigError):
            FingerprintService.dist_q3(a, b)


class TestDistanceMetric:
    def test_metric_properties_on_random_profiles(self, rng):
        """随机指纹上: 自距离为零、非负、对称、满足三角不等式"""
        items = [fingerprint(f'o{i}', rng.uniform(0.0, 255.0, size=4).tolist()) for i in range(12)]
        dist = FingerprintService.dist_q3
        for a in items:
            assert dist(a, a) == 0.0
            for b in items:
                d_ab = dist(a, b)
                assert d_ab >= 0.0
                assert d_ab == dist(b, a)
                for c in items:
                    assert d_ab <= dist(a, c) + dist(c, b) + 1e-9

    def test_distinct_profiles_have_positive_distance(self, rng):
        a = fingerprint('o1', rng.uniform(0.0, 255.0, size=4).tolist())
        b = fingerprint('o2', [q + 0.5 for q in a.q3_profile(0)])
        assert FingerprintService.dist_q3(a, b) == pytest.approx(0.5)


REFLECTANCE_CLASSES = (('DarkSurface', 0.1), ('GreySurface', 0.5), ('BrightSurface', 0.9))


def station_scan(objects_per_class=3):
    """每个对象一个测站: 传感器位于 (100k, 0, 0), 正前方 1 m 处一面 6 m × 6 m 的墙, 测站之间超出量程"""
    surfaces = []
    positions = []
    for k in range(objects_per_class * len(REFLECTANCE_CLASSES)):
        class_name, _ = REFLECTANCE_CLASSES[k % len(REFLECTANCE_CLASSES)]
        surfaces.append(square_x(f'wall-{k}', 100.0 * k + 1.0, half=3.0, object_id=f'obj-{k}',
                                 class_name=class_name, material=class_name))
        positions.append((100.0 * k, 0.0, 0.0))
    scene = Scene(surfaces, [Material(name, reflectance) for name, reflectance in REFLECTANCE_CLASSES])
    sensor = SensorModel(sensor_id='s1', channels=4, vertical_fov=(-10.0, 10.0), angular_step_h=2.0,
                         max_range=5.0)
    scan = ScanSimulator.simulate_scan(scene, sensor, Trajectory.stationary(positions), seed=7, campaign_id='c1')
    return scene, scan


class TestClassSeparation:
    def test_simulated_classes_are_separated(self):
        """无噪声仿真: 三种反射率的类别之间距离至少是类内距离的5倍"""
        scene, scan = station_scan()
        index = SurfaceIndex.build(scene.surfaces)
        associations, summary = AssociationService.associate_batch(scan.beams, index, workers=1)
        assert summary.total == len(scan.beams)
        assert summary.associated >= 0.99 * summary.total
        records = AssociationService.enrich_points(associations, scene, scan.beams)

        fingerprints, _ = FingerprintService.extract_fingerprints(records)
        assert len(fingerprints) == 9
        assert all(fp.is_covered(0, 5) for fp in fingerprints.values())

        matrix = FingerprintService.group_distance_matrix(fingerprints, 'class')
        assert matrix.labels == ['BrightSurface', 'DarkSurface', 'GreySurface']
        assert matrix.group_sizes == {'BrightSurface': 3, 'DarkSurface': 3, 'GreySurface': 3}
        for i, row in enumerate(matrix.values):
            intra = row[i]
            for j, inter in enumerate(row):
                if j == i:
                    continue
                assert inter > 1.0
                assert inter >= 5.0 * intra

    def test_brighter_class_has_higher_profile(self):
        scene, scan = station_scan(objects_per_class=1)
        index = SurfaceIndex.build(scene.surfaces)
        associations, _ = AssociationService.associate_batch(scan.beams, index, workers=1)
        records = AssociationService.enrich_points(associations, scene, scan.beams)
        fingerprints, _ = FingerprintService.extract_fingerprints(records)
        profiles = {fp.class_name: fp.q3_profile(0) for fp in fingerprints.values()}
        for dark, grey, bright in zip(profiles['DarkSurface'], profiles['GreySurface'], profiles['BrightSurface']):
            assert dark < grey < bright


class TestGroupDistance:
    def fingerprints(self):
        items = [
            fingerprint('o1', [10, 10, 10, 10]),
            fingerprint('o2', [12, 12, 12, 12]),
            fingerprint('o3', [20, 20, 20, 20], class_name='RoofSurface', function='roof'),
            fingerprint('o4', [0, 0, 0, 0], count=1),
        ]
        return {fp.key: fp for fp in items}

    def test_mean_group_distance_skips_same_object(self):
        fingerprints = self.fingerprints()
        wall = [FingerprintKey('c1', 's1', 'o1'), FingerprintKey('c1', 's1', 'o2')]
        assert FingerprintService.mean_group_distance(wall, wall, fingerprints) == pytest.approx(2.0)

    def test_empty_pair_set(self):
        fingerprints = self.fingerprints()
        only = [FingerprintKey('c1', 's1', 'o3')]
        with pytest.raises(EmptyPairSetError):
            FingerprintService.mean_group_distance(only, only, fingerprints)

    def test_unknown_key(self):
        with pytest.raises(UnknownReferenceError):
            FingerprintService.mean_group_distance([FingerprintKey('c9', 's1', 'o1')],
                                                   [FingerprintKey('c1', 's1', 'o1')], self.fingerprints())

    def test_class_matrix(self):
        matrix = FingerprintService.group_distance_matrix(self.fingerprints(), 'class')
        assert matrix.labels == ['RoofSurface', 'WallSurface']
        assert entry(matrix, 'WallSurface', 'WallSurface') == pytest.approx(2.0)
        assert entry(matrix, 'WallSurface', 'RoofSurface') == pytest.approx(9.0)
        assert entry(matrix, 'RoofSurface', 'WallSurface') == entry(matrix, 'WallSurface', 'RoofSurface')
        assert entry(matrix, 'RoofSurface', 'RoofSurface') is None
        # o4 覆盖不完整, 不参与
        assert matrix.group_sizes == {'RoofSurface': 1, 'WallSurface': 2}

    def test_function_matrix(self):
        matrix = FingerprintService.group_distance_matrix(self.fingerprints(), 'function')
        assert matrix.labels == ['facade', 'roof']
        assert entry(matrix, 'facade', 'roof') == pytest.approx(9.0)

    def test_object_matrix(self):
        matrix = FingerprintService.group_distance_matrix(self.fingerprints(), 'object')
        assert matrix.labels == ['c1/s1/o1', 'c1/s1/o2', 'c1/s1/o3']
        assert entry(matrix, 'c1/s1/o1', 'c1/s1/o1') == 0.0
        assert entry(matrix, 'c1/s1/o1', 'c1/s1/o3') == pytest.approx(10.0)

    def test_unknown_grouping(self):
        with pytest.raises(ConfigError):
            FingerprintService.group_distance_matrix(self.fingerprints(), 'material')


class TestFeatureMatrix:
    def test_default_columns(self):
        records = [record(2, 0, intensity=7.0, sensor_id='s2'), record(1, 0, intensity=5.0), BeamRecord(make_beam(3))]
        header, rows = FingerprintService.export_feature_matrix(records)
        assert header == ['beam_id', 'intensity', 'range', 'zenith', 'azimuth', 'campaign', 'sensor=s1', 'sensor=s2']
        assert rows[0] == [1, 5.0, 5.0, 0.0, 0.0, 'c1', 1, 0]
        assert rows[1][-2:] == [0, 1]
        assert rows[2][3] is None

    def test_column_subset(self):
        header, rows = FingerprintService.export_feature_matrix([record(1, 0)], ['intensity'])
        assert header == ['beam_id', 'intensity']
        assert rows == [[1, 50.0]]

    def test_unknown_column(self):
        with pytest.raises(ConfigError):
            FingerprintService.export_feature_matrix([record(1, 0)], ['colour'])
