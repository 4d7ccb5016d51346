"""STNSR1 tensor files.

Layout: ``b"STNSR1"``, u8 rank, rank × u32 LE dims, then float32 LE payload in
row-major order. Readers upcast to float64.
"""

import struct
from pathlib import Path

import numpy as np

from ..errors import BadMagicError, DimMismatchError, MissingFileError, ShapeError
from .tensor import MAX_RANK, Tensor

MAGIC = b"STNSR1"


def encode_tensor(x) -> bytes:
    arr = np.asarray(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
    if not 1 <= arr.ndim <= MAX_RANK:
        raise ShapeError(f"STNSR1 supports rank 1-{MAX_RANK}, got {arr.ndim}")
    header = MAGIC + struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + np.ascontiguousarray(arr, dtype="<f4").tobytes()


def decode_tensor(buf: bytes, name: str = "<bytes>") -> np.ndarray:
    if len(buf) < len(MAGIC) + 1 or buf[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{name}: not an STNSR1 file")
    rank = buf[len(MAGIC)]
    if not 1 <= rank <= MAX_RANK:
        raise DimMismatchError(f"{name}: invalid rank {rank}")
    off = len(MAGIC) + 1
    if len(buf) < off + 4 * rank:
        raise DimMismatchError(f"{name}: truncated header")
    dims = struct.unpack(f"<{rank}I", buf[off:off + 4 * rank])
    off += 4 * rank
    count = int(np.prod(dims))
    if len(buf) - off != 4 * count:
        raise DimMismatchError(f"{name}: payload has {len(buf) - off} bytes, dims {dims} need {4 * count}")
    return np.frombuffer(buf, dtype="<f4", offset=off).astype(np.float64).reshape(dims)


def save_tensor(path, x) -> None:
    Path(path).write_bytes(encode_tensor(x))


def load_tensor(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"no such tensor file: {path}")
    return decode_tensor(path.read_bytes(), str(path))
