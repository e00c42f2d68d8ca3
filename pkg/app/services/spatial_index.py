"""表面包围盒层次结构(BVH)

构建完成后索引不可变，可供多个线程并发查询。节点以扁平数组保存:
内部节点记录两个子节点下标，叶节点记录 leaf_items 中的区间。
"""
import numpy as np
from app.models.geometry import Aabb
from app.services.geometry import is_front_facing, segment_surface_distance
from app.utils.errors import DuplicateIdError
from app.utils.logger import get_logger

logger = get_logger(__name__)

# 叶节点最大表面数
LEAF_CAPACITY = 8


class QueryStats:
    """查询计数器(由调用方持有, 不在线程间共享)"""

    def __init__(self):
        self.queries = 0
        self.node_visits = 0
        self.leaf_visits = 0
        self.exact_tests = 0

    def to_dict(self):
        return {
            'queries': self.queries,
            'node_visits': self.node_visits,
            'leaf_visits': self.leaf_visits,
            'exact_tests': self.exact_tests,
        }


class SurfaceIndex:
    """表面BVH索引"""

    def __init__(self, surfaces, node_min, node_max, node_left, node_right, leaf_items):
        self._surfaces = surfaces
        self._by_id = {s.id: s for s in surfaces}
        self._box_min = np.array([s.bounds.min for s in surfaces]).reshape(-1, 3)
        self._box_max = np.array([s.bounds.max for s in surfaces]).reshape(-1, 3)
        self.node_min = node_min
        self.node_max = node_max
        # 内部节点: left/right 为子节点下标；叶节点: left 为 -1, right 为 (start, end)
        self.node_left = node_left
        self.node_right = node_right
        self.leaf_items = leaf_items

    @classmethod
    def build(cls, surfaces):
        """
        构建索引

        Args:
            surfaces: 表面列表, ID必须唯一

        Returns:
            SurfaceIndex

        Raises:
            DuplicateIdError: 表面ID重复
        """
        surfaces = list(surfaces)
        seen = set()
        for surface in surfaces:
            if surface.id in seen:
                raise DuplicateIdError(f'表面ID重复: {surface.id}', duplicate_id=surface.id)
            seen.add(surface.id)

        node_min, node_max, node_left, node_right, leaf_items = [], [], [], [], []
        if surfaces:
            box_min = np.array([s.bounds.min for s in surfaces])
            box_max = np.array([s.bounds.max for s in surfaces])
            centers = (box_min + box_max) / 2.0

            # 显式栈, 节点按先序编号
            root_items = np.arange(len(surfaces))
            stack = [(root_items, None, None)]
            while stack:
                items, parent, side = stack.pop()
                index = len(node_min)
                node_min.append(box_min[items].min(axis=0))
                node_max.append(box_max[items].max(axis=0))
                node_left.append(-1)
                node_right.append(None)
                if parent is not None:
                    if side == 'left':
                        node_left[parent] = index
                    else:
                        node_right[parent] = index

                if len(items) <= LEAF_CAPACITY:
                    start = len(leaf_items)
                    leaf_items.extend(int(i) for i in items)
                    node_right[index] = (start, len(leaf_items))
                    continue

                spread = centers[items].max(axis=0) - centers[items].min(axis=0)
                axis = int(np.argmax(spread))
                # 稳定排序, 相同坐标保持输入顺序
                order = items[np.argsort(centers[items, axis], kind='stable')]
                middle = len(order) // 2
                node_left[index] = -2
                stack.append((order[middle:], index, 'right'))
                stack.append((order[:middle], index, 'left'))

        index = cls(
            surfaces,
            np.array(node_min).reshape(-1, 3),
            np.array(node_max).reshape(-1, 3),
            node_left,
            node_right,
            leaf_items,
        )
        logger.debug(f'表面索引构建完成: 表面数={len(surfaces)}, 节点数={len(node_min)}')
        return index

    def __len__(self):
        return len(self._surfaces)

    @property
    def surfaces(self):
        return list(self._surfaces)

    @property
    def node_count(self):
        return len(self.node_left)

    def get(self, surface_id):
        return self._by_id.get(surface_id)

    def is_leaf(self, node):
        return self.node_left[node] == -1

    def leaves(self):
        """遍历叶节点, 返回 (节点下标, 表面ID列表)"""
        for node in range(self.node_count):
            if self.is_leaf(node):
                start, end = self.node_right[node]
                yield node, [self._surfaces[i].id for i in self.leaf_items[start:end]]

    def _collect(self, box_min, box_max, stats=None):
        """返回包围盒与查询盒相交的表面下标"""
        found = []
        if not self._surfaces:
            return found
        stack = [0]
        while stack:
            node = stack.pop()
            if stats is not None:
                stats.node_visits += 1
            if np.any(self.node_min[node] > box_max) or np.any(box_min > self.node_max[node]):
                continue
            if self.node_left[node] == -1:
                if stats is not None:
                    stats.leaf_visits += 1
                start, end = self.node_right[node]
                for item in self.leaf_items[start:end]:
                    if np.all(self._box_min[item] <= box_max) and np.all(box_min <= self._box_max[item]):
                        found.append(item)
            else:
                stack.append(self.node_right[node])
                stack.append(self.node_left[node])
        return found

    def query_box(self, box):
        """
        查询包围盒与给定盒相交的表面

        Args:
            box: Aabb

        Returns:
            表面ID列表(按ID排序)
        """
        items = self._collect(box.min, box.max)
        return sorted(self._surfaces[i].id for i in items)

    def query_candidates(self, segment, radius, beam_dir, stats=None):
        """
        查询球柱体候选表面

        先用按半径膨胀的线段包围盒裁剪节点，再在叶节点上做精确判定。

        Args:
            segment: 不确定性线段
            radius: 球柱体半径
            beam_dir: 光束单位方向
            stats: 可选的QueryStats

        Returns:
            满足候选条件的表面ID列表(顺序不保证)
        """
        if stats is not None:
            stats.queries += 1
        start, end = segment.endpoints()
        box_min = np.minimum(start, end) - radius
        box_max = np.maximum(start, end) + radius

        candidates = []
        for item in self._collect(box_min, box_max, stats):
            surface = self._surfaces[item]
            if not is_front_facing(beam_dir, surface.normal):
                continue
            if stats is not None:
                stats.exact_tests += 1
            if segment_surface_distance(segment, surface) <= radius:
                candidates.append(surface.id)
        return candidates

    def bounds(self):
        """整个索引的包围盒, 空索引返回None"""
        if not self._surfaces:
            return None
        return Aabb(self.node_min[0], self.node_max[0])


def build_index(surfaces):
    """构建表面索引"""
    return SurfaceIndex.build(surfaces)


def query_candidates(index, segment, radius, beam_dir, stats=None):
    """在索引中查询候选表面"""
    return index.query_candidates(segment, radius, beam_dir, stats)
