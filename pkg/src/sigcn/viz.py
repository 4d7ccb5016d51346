"""Binary PGM (P5) export for masks and activation maps."""

import re
from pathlib import Path

import numpy as np

from .errors import BadMagicError, DimMismatchError, MissingFileError, ShapeError


def to_gray(values) -> np.ndarray:
    """Map [0, 1] values to 8-bit gray (``round(v * 255)``)."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise ShapeError(f"PGM export needs an H×W map, got {v.shape}")
    return np.rint(np.clip(v, 0.0, 1.0) * 255.0).astype(np.uint8)


def encode_pgm(gray: np.ndarray) -> bytes:
    h, w = gray.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(gray, dtype=np.uint8).tobytes()


def write_pgm(path, values) -> None:
    """Write an H×W map with values in [0, 1]; binary masks come out as 0/255."""
    Path(path).write_bytes(encode_pgm(to_gray(values)))


def read_pgm(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"no such image: {path}")
    buf = path.read_bytes()
    # header fields are separated by whitespace; exactly one whitespace byte
    # follows maxval, so the payload may itself start with whitespace values
    head = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", buf)
    if head is None:
        raise BadMagicError(f"{path}: not a binary PGM")
    w, h, maxval = (int(g) for g in head.groups())
    if maxval != 255:
        raise DimMismatchError(f"{path}: only 8-bit PGM is supported")
    payload = buf[head.end():]
    if len(payload) != w * h:
        raise DimMismatchError(f"{path}: payload {len(payload)} bytes, expected {w * h}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w)
