"""工具模块初始化"""
from .logger import setup_logger, get_logger
from .file_handler import FileHandler
from .errors import BeamSurfaceError

__all__ = ['setup_logger', 'get_logger', 'FileHandler', 'BeamSurfaceError']
