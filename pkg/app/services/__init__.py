"""服务层模块初始化"""
from .spatial_index import SurfaceIndex
from .association_service import AssociationService
from .fingerprint_service import FingerprintService
from .scan_simulator import ScanSimulator
from .registration_service import RegistrationService
from .sensor_store import SensorStore
from .report_service import ReportService
from .task_scheduler import TaskScheduler

__all__ = ['SurfaceIndex', 'AssociationService', 'FingerprintService', 'ScanSimulator',
           'RegistrationService', 'SensorStore', 'ReportService', 'TaskScheduler']
