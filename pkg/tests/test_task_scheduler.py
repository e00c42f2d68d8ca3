"""任务调度与并行度规划测试"""
import pytest

from app.services.hardware_optimizer import WorkerPlanner, get_planner
from app.services.task_scheduler import TaskScheduler


class TestTaskScheduler:
    def test_chunked(self):
        assert TaskScheduler.chunked(list(range(7)), 3) == [[0, 1, 2], [3, 4, 5], [6]]
        assert TaskScheduler.chunked([], 3) == []
        assert TaskScheduler.chunked([1, 2], 0) == [[1], [2]]

    def test_resolve_workers(self):
        assert TaskScheduler.resolve_workers(3) == 3
        assert TaskScheduler.resolve_workers(0) == 1
        assert TaskScheduler.resolve_workers(None) >= 1

    @pytest.mark.parametrize('workers', [1, 2, 8])
    def test_results_keep_input_order(self, workers):
        items = list(range(50))
        assert TaskScheduler.map_ordered(lambda x: x * x, items, workers=workers) == [x * x for x in items]

    @pytest.mark.parametrize('workers', [1, 2])
    def test_error_propagates(self, workers):
        def fail(item):
            if item == 2:
                raise ValueError('boom')
            return item

        with pytest.raises(ValueError):
            TaskScheduler.map_ordered(fail, [1, 2, 3], workers=workers)


class TestWorkerPlanner:
    def test_default_workers_respects_cap(self):
        planner = WorkerPlanner(max_workers=2)
        assert 1 <= planner.default_workers() <= 2

    def test_chunk_size_spreads_work(self):
        planner = WorkerPlanner(max_workers=4, base_chunk_size=5000)
        assert planner.chunk_size(100, workers=4) <= 7
        assert planner.chunk_size(10 ** 9, workers=4) <= 5000
        assert planner.chunk_size(0, workers=4) >= 1

    def test_global_planner_is_shared(self):
        assert get_planner() is get_planner()
