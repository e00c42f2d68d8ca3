"""列式数据包文件编解码

文件布局(全部小端):

    magic(8字节) | 头部长度(u4) | 头部JSON | 各列连续数据 | CRC32(u4)

头部JSON记录行数和按顺序排列的 (列名, dtype) 列表；CRC32 覆盖除尾部外的全部字节。
"""
import json
import struct
import zlib
import numpy as np
from app.utils.errors import DataIntegrityError

PACKAGE_MAGIC = b'B2SPKG01'

_LENGTH = struct.Struct('<I')


def encode_columns(columns, schema):
    """
    把列字典编码为字节串

    Args:
        columns: 列名 → 一维数组
        schema: [(列名, dtype字符串), ...], 决定列顺序和类型

    Returns:
        bytes
    """
    rows = None
    for name, _ in schema:
        if name not in columns:
            raise DataIntegrityError(f'缺少列: {name}')
        length = len(columns[name])
        if rows is None:
            rows = length
        elif length != rows:
            raise DataIntegrityError(f'列 {name} 行数({length})与其他列({rows})不一致')
    rows = rows or 0

    header = json.dumps({'rows': rows, 'columns': [list(item) for item in schema]},
                        separators=(',', ':')).encode('utf-8')
    parts = [PACKAGE_MAGIC, _LENGTH.pack(len(header)), header]
    for name, dtype in schema:
        parts.append(np.ascontiguousarray(columns[name], dtype=np.dtype(dtype)).tobytes())
    body = b''.join(parts)
    return body + _LENGTH.pack(zlib.crc32(body) & 0xFFFFFFFF)


def decode_header(data):
    """解析并校验文件头, 返回 (行数, schema, 数据起始偏移)"""
    if len(data) < len(PACKAGE_MAGIC) + 2 * _LENGTH.size or not data.startswith(PACKAGE_MAGIC):
        raise DataIntegrityError('数据包文件头无效')
    body, trailer = data[:-_LENGTH.size], data[-_LENGTH.size:]
    if zlib.crc32(body) & 0xFFFFFFFF != _LENGTH.unpack(trailer)[0]:
        raise DataIntegrityError('数据包校验和不匹配')

    offset = len(PACKAGE_MAGIC)
    (header_length,) = _LENGTH.unpack_from(data, offset)
    offset += _LENGTH.size
    try:
        header = json.loads(data[offset:offset + header_length].decode('utf-8'))
        rows = int(header['rows'])
        schema = [(str(name), str(dtype)) for name, dtype in header['columns']]
    except (ValueError, KeyError, TypeError) as e:
        raise DataIntegrityError(f'数据包头部无法解析: {e}') from e
    return rows, schema, offset + header_length


def decode_columns(data, names=None):
    """
    把字节串解码为列字典

    Args:
        data: encode_columns 产生的字节
        names: 只解码这些列(默认全部)

    Returns:
        (行数, 列名 → numpy数组)

    Raises:
        DataIntegrityError: 文件损坏、校验和不匹配或缺少请求的列
    """
    rows, schema, offset = decode_header(data)
    end = len(data) - _LENGTH.size
    wanted = set(names) if names is not None else None
    known = {name for name, _ in schema}
    if wanted is not None and not wanted <= known:
        raise DataIntegrityError(f'数据包缺少列: {sorted(wanted - known)}')

    columns = {}
    for name, dtype in schema:
        dt = np.dtype(dtype)
        size = rows * dt.itemsize
        if offset + size > end:
            raise DataIntegrityError(f'数据包被截断: 列 {name}')
        if wanted is None or name in wanted:
            columns[name] = np.frombuffer(data, dtype=dt, count=rows, offset=offset).copy()
        offset += size
    if offset != end:
        raise DataIntegrityError('数据包长度与头部不一致')
    return rows, columns
