"""表面索引测试"""
import numpy as np
import pytest

from conftest import square_x
from app.models.geometry import Aabb, Segment
from app.services.geometry import spherocylinder_candidate
from app.services.spatial_index import LEAF_CAPACITY, QueryStats, SurfaceIndex, build_index, query_candidates
from app.utils.errors import DuplicateIdError


def random_walls(rng, count):
    """在 x ∈ [2, 30] 上随机摆放的小墙面"""
    walls = []
    for i in range(count):
        x = float(rng.uniform(2.0, 30.0))
        cy, cz = rng.uniform(-5.0, 5.0, size=2)
        walls.append(square_x(f'w{i:03d}', x, half=float(rng.uniform(0.2, 1.0)), center=(float(cy), float(cz))))
    return walls


class TestBuild:
    def test_empty_index(self):
        index = SurfaceIndex.build([])
        assert len(index) == 0
        assert index.node_count == 0
        assert index.bounds() is None
        assert index.query_box(Aabb((-1, -1, -1), (1, 1, 1))) == []
        segment = Segment((5, 0, 0), (1, 0, 0), 0.5)
        assert index.query_candidates(segment, 0.05, np.array([1.0, 0.0, 0.0])) == []

    def test_single_surface_is_one_leaf(self):
        index = build_index([square_x('a', 5.0)])
        leaves = list(index.leaves())
        assert index.node_count == 1
        assert leaves == [(0, ['a'])]

    def test_duplicate_surface_id(self):
        with pytest.raises(DuplicateIdError):
            SurfaceIndex.build([square_x('a', 5.0), square_x('a', 6.0)])

    def test_every_surface_in_exactly_one_leaf(self, rng):
        walls = random_walls(rng, 100)
        index = SurfaceIndex.build(walls)
        seen = []
        for _, ids in index.leaves():
            assert 1 <= len(ids) <= LEAF_CAPACITY
            seen.extend(ids)
        assert sorted(seen) == sorted(w.id for w in walls)

    def test_node_boxes_contain_children(self, rng):
        index = SurfaceIndex.build(random_walls(rng, 60))
        for node in range(index.node_count):
            if index.is_leaf(node):
                start, end = index.node_right[node]
                for item in index.leaf_items[start:end]:
                    bounds = index.surfaces[item].bounds
                    assert np.all(index.node_min[node] <= bounds.min)
                    assert np.all(bounds.max <= index.node_max[node])
            else:
                for child in (index.node_left[node], index.node_right[node]):
                    assert np.all(index.node_min[node] <= index.node_min[child])
                    assert np.all(index.node_max[child] <= index.node_max[node])

    def test_build_is_deterministic(self, rng):
        walls = random_walls(rng, 50)
        first = SurfaceIndex.build(walls)
        second = SurfaceIndex.build(walls)
        assert list(first.leaves()) == list(second.leaves())


# ---------------------------------------------------------------------------
# 查询
# ---------------------------------------------------------------------------

class TestQuery:
    def test_query_box(self):
        index = SurfaceIndex.build([square_x('near', 5.0), square_x('far', 20.0), square_x('mid', 10.0)])
        assert index.query_box(Aabb((4, -1, -1), (11, 1, 1))) == ['mid', 'near']
        assert index.query_box(Aabb((30, -1, -1), (31, 1, 1))) == []

    def test_query_box_touching_face(self):
        index = SurfaceIndex.build([square_x('a', 5.0)])
        assert index.query_box(Aabb((5, 0, 0), (6, 1, 1))) == ['a']

    def test_candidates_match_brute_force(self, rng):
        walls = random_walls(rng, 120)
        index = SurfaceIndex.build(walls)
        direction = np.array([1.0, 0.0, 0.0])
        for _ in range(200):
            cy, cz = rng.uniform(-5.0, 5.0, size=2)
            center = (float(rng.uniform(1.0, 31.0)), float(cy), float(cz))
            segment = Segment(center, direction, 0.5)
            expected = {w.id for w in walls if spherocylinder_candidate(segment, w, direction, 0.05)}
            assert set(index.query_candidates(segment, 0.05, direction)) == expected

    def test_back_facing_surfaces_excluded(self):
        index = SurfaceIndex.build([square_x('front', 5.0), square_x('back', 5.2, normal=(1, 0, 0))])
        segment = Segment((5, 0, 0), (1, 0, 0), 0.5)
        assert index.query_candidates(segment, 0.05, np.array([1.0, 0.0, 0.0])) == ['front']

    def test_short_segment_visits_few_leaves(self):
        """120 面墙沿x排开, 短线段查询只进入极少数叶节点"""
        walls = [square_x(f'w{i:03d}', float(i), half=0.4) for i in range(1, 121)]
        index = SurfaceIndex.build(walls)
        leaves = list(index.leaves())
        assert len(leaves) >= len(walls) // LEAF_CAPACITY

        stats = QueryStats()
        segment = Segment((50.0, 0.0, 0.0), (1.0, 0.0, 0.0), 0.5)
        assert index.query_candidates(segment, 0.05, np.array([1.0, 0.0, 0.0]), stats) == ['w050']
        assert stats.leaf_visits / len(leaves) <= 0.2
        assert stats.exact_tests / len(walls) <= 0.05

    def test_stats_are_counted(self, rng):
        index = SurfaceIndex.build(random_walls(rng, 40))
        stats = QueryStats()
        segment = Segment((10, 0, 0), (1, 0, 0), 0.5)
        query_candidates(index, segment, 0.05, np.array([1.0, 0.0, 0.0]), stats)
        query_candidates(index, segment, 0.05, np.array([1.0, 0.0, 0.0]), stats)
        assert stats.queries == 2
        assert stats.node_visits >= 2
        assert stats.to_dict()['queries'] == 2
