"""Deterministic binary container for named arrays plus a JSON header.

Used for checkpoints and trajectory datasets. The format carries no
timestamps and sorts keys, so saving the same content twice produces
byte-identical files (numpy's .npz wraps a zip archive, whose local
headers embed mtimes).

Layout, all integers little-endian u64 unless noted:
  magic ``EISPREC1`` (8 bytes)
  header length, header bytes (JSON, sorted keys)
  record count
  per record: name length, name bytes, dtype code (1 byte: f=float64,
  i=int64), ndim (1 byte), dims, raw array bytes in C order
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"EISPREC1"
_DTYPES = {b"f": np.dtype("<f8"), b"i": np.dtype("<i8")}
_CODES = {"float64": b"f", "int64": b"i"}


def save_records(path, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    chunks = [MAGIC]
    header = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()
    chunks.append(struct.pack("<Q", len(header)))
    chunks.append(header)
    chunks.append(struct.pack("<Q", len(arrays)))
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        code = _CODES.get(arr.dtype.name)
        if code is None:
            raise TypeError(f"{name}: unsupported dtype {arr.dtype}, use float64 or int64")
        nb = name.encode()
        chunks.append(struct.pack("<Q", len(nb)))
        chunks.append(nb)
        chunks.append(code)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape) if arr.ndim else b"")
        chunks.append(arr.astype(_DTYPES[code], copy=False).tobytes(order="C"))
    Path(path).write_bytes(b"".join(chunks))


def load_records(path) -> tuple[dict, dict[str, np.ndarray]]:
    buf = Path(path).read_bytes()
    if buf[:8] != MAGIC:
        raise ValueError(f"{path}: not a record file (bad magic)")
    off = 8

    def take(n):
        nonlocal off
        out = buf[off : off + n]
        if len(out) != n:
            raise ValueError(f"{path}: truncated record file")
        off += n
        return out

    (hlen,) = struct.unpack("<Q", take(8))
    meta = json.loads(take(hlen).decode())
    (count,) = struct.unpack("<Q", take(8))
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<Q", take(8))
        name = take(nlen).decode()
        dtype = _DTYPES[take(1)]
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}Q", take(8 * ndim)) if ndim else ()
        nbytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64)) if ndim else dtype.itemsize
        arrays[name] = np.frombuffer(take(nbytes), dtype=dtype).reshape(shape).copy()
    if off != len(buf):
        raise ValueError(f"{path}: trailing bytes after last record")
    return meta, arrays
