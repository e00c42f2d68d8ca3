"""数据模型模块初始化"""
from .geometry import Aabb, GeomParams, LocalFrame, Ray, Segment
from .surface import Material, Scene, Surface
from .beam import Beam, BeamRecord
from .association import Association, AssociationConfig, AssociationSummary, ObjectStats
from .fingerprint import BinGrid, CellStats, Fingerprint, FingerprintFilter, FingerprintKey
from .sensor import Pose, SensorModel, Trajectory
from .point_cloud import PointCloud, RegistrationResult, RigidTransform
from .registry import Campaign, Package, Platform, Sensor

__all__ = [
    'Aabb', 'GeomParams', 'LocalFrame', 'Ray', 'Segment',
    'Material', 'Scene', 'Surface',
    'Beam', 'BeamRecord',
    'Association', 'AssociationConfig', 'AssociationSummary', 'ObjectStats',
    'BinGrid', 'CellStats', 'Fingerprint', 'FingerprintFilter', 'FingerprintKey',
    'Pose', 'SensorModel', 'Trajectory',
    'PointCloud', 'RegistrationResult', 'RigidTransform',
    'Campaign', 'Package', 'Platform', 'Sensor',
]
