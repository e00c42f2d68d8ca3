"""测试公共夹具"""
import os
import sys
import tempfile
from pathlib import Path

# 日志写到临时目录, 必须在导入 config 之前设置
os.environ.setdefault('B2S_LOG_DIR', tempfile.mkdtemp(prefix='b2s-logs-'))

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import numpy as np
import pytest

from app.models.beam import Beam
from app.models.surface import Material, Scene, Surface


def square_x(surface_id, x, half=0.5, center=(0.0, 0.0), normal=(-1.0, 0.0, 0.0), object_id=None,
             class_name='WallSurface', function=None, material=None):
    """x = 常数 平面上的正方形, 默认法向 −x(朝向原点方向的传感器)"""
    cy, cz = center
    vertices = [(x, cy - half, cz - half), (x, cy + half, cz - half),
                (x, cy + half, cz + half), (x, cy - half, cz + half)]
    return Surface(surface_id, vertices, object_id or f'obj-{surface_id}', class_name,
                   function=function, material=material, normal=normal)


def make_beam(beam_id, origin=(0.0, 0.0, 0.0), direction=(1.0, 0.0, 0.0), range=5.0, intensity=50.0,
              timestamp_ns=None, sensor_id='s1', campaign_id='c1'):
    return Beam(beam_id, origin, direction, range, intensity,
                beam_id * 1000 if timestamp_ns is None else timestamp_ns, sensor_id, campaign_id)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def wall_scene():
    """x = 5 处一面 1 m × 1 m 的墙, 法向朝 −x"""
    return Scene([square_x('wall-1', 5.0, function='facade', material='brick')],
                 [Material('brick', 0.9)], name='wall')


@pytest.fixture
def store_dir(tmp_path):
    return tmp_path / 'store'
