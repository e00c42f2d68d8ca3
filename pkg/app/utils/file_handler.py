"""文件处理工具模块"""
import json
import os
from pathlib import Path
from app.utils.errors import DataIntegrityError, MissingInputError
from app.utils.logger import get_logger
import chardet

logger = get_logger(__name__)


class FileHandler:
    """文件处理工具类"""

    @staticmethod
    def ensure_dir(directory):
        """
        确保目录存在

        Args:
            directory: 目录路径
        """
        Path(directory).mkdir(parents=True, exist_ok=True)

    @staticmethod
    def require_file(file_path):
        """
        检查输入文件存在

        Args:
            file_path: 文件路径

        Returns:
            Path对象

        Raises:
            MissingInputError: 文件不存在
        """
        path = Path(file_path)
        if not path.is_file():
            raise MissingInputError(f'输入文件不存在: {path}')
        return path

    @staticmethod
    def require_dir(directory):
        """检查输入目录存在"""
        path = Path(directory)
        if not path.is_dir():
            raise MissingInputError(f'输入目录不存在: {path}')
        return path

    @staticmethod
    def atomic_write_bytes(file_path, data):
        """
        原子写入二进制文件: 先写临时文件并落盘，再重命名覆盖

        Args:
            file_path: 目标文件路径
            data: 字节内容
        """
        path = Path(file_path)
        FileHandler.ensure_dir(path.parent)
        tmp_path = path.with_name(path.name + '.tmp')
        with open(tmp_path, 'wb') as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_path, path)

    @staticmethod
    def atomic_write_text(file_path, text):
        """原子写入UTF-8文本文件"""
        FileHandler.atomic_write_bytes(file_path, text.encode('utf-8'))

    @staticmethod
    def write_json(file_path, payload):
        """以稳定的键顺序原子写入JSON文件"""
        text = json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True)
        FileHandler.atomic_write_text(file_path, text + '\n')

    @staticmethod
    def read_json(file_path):
        """
        读取JSON文件

        Raises:
            MissingInputError: 文件不存在
            DataIntegrityError: JSON无法解析
        """
        content, _ = FileHandler.read_text_file(FileHandler.require_file(file_path))
        try:
            return json.loads(content or '')
        except json.JSONDecodeError as e:
            raise DataIntegrityError(f'JSON解析失败 {file_path}: {e}') from e

    @staticmethod
    def detect_file_encoding(file_path):
        """
        检测文件编码

        Args:
            file_path: 文件路径

        Returns:
            (编码名称, 置信度)
        """
        try:
            with open(file_path, 'rb') as f:
                raw_data = f.read()

            # 使用chardet检测编码
            result = chardet.detect(raw_data)
            encoding = result.get('encoding') or 'utf-8'
            confidence = result.get('confidence') or 0

            # 纯ASCII文件按UTF-8处理
            if encoding.lower() == 'ascii' or confidence < 0.5:
                encoding = 'utf-8'

            logger.debug(f'文件编码检测: {file_path} -> {encoding} (置信度: {confidence})')
            return encoding, confidence

        except OSError as e:
            logger.error(f'编码检测失败 {file_path}: {str(e)}')
            return 'utf-8', 0

    @staticmethod
    def read_text_file(file_path):
        """
        读取文本文件，自动检测编码

        Args:
            file_path: 文件路径

        Returns:
            (文件内容, 使用的编码)
        """
        FileHandler.require_file(file_path)
        encodings = ['utf-8-sig', 'utf-8', 'utf-16', 'latin-1']

        # 首先尝试使用chardet检测
        detected_encoding, confidence = FileHandler.detect_file_encoding(file_path)
        if detected_encoding and confidence > 0.7:
            encodings.insert(0, detected_encoding)

        for encoding in encodings:
            try:
                with open(file_path, 'r', encoding=encoding, newline='') as f:
                    content = f.read()
                return content, encoding
            except (UnicodeDecodeError, LookupError) as e:
                logger.debug(f'尝试编码 {encoding} 失败: {str(e)}')
                continue

        raise DataIntegrityError(f'无法使用任何编码读取文件: {file_path}')
