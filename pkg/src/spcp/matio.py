"""Matrix file I/O.

Two formats:

* CSV of reals, one matrix row per line.
* Binary: 8-byte magic ``SPCPMAT1``, then u64 rows, u64 cols, then
  rows*cols little-endian f64 in row-major order.

Writing picks the format from the extension (``.csv`` is text, anything
else is binary); reading sniffs the magic bytes.
"""

import struct

import numpy as np

from .linalg import check_matrix

MAGIC = b"SPCPMAT1"

__all__ = ["MAGIC", "save_matrix", "load_matrix"]


def save_matrix(path, M):
    path = str(path)
    M = check_matrix(M)
    if path.lower().endswith(".csv"):
        np.savetxt(path, M, delimiter=",", fmt="%.17g")
        return
    rows, cols = M.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQ", rows, cols))
        fh.write(np.ascontiguousarray(M, dtype="<f8").tobytes())


def load_matrix(path):
    path = str(path)
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
        if head == MAGIC:
            rows, cols = struct.unpack("<QQ", fh.read(16))
            data = np.frombuffer(fh.read(rows * cols * 8), dtype="<f8")
            if data.size != rows * cols:
                raise ValueError(f"truncated matrix file: {path}")
            return data.reshape(rows, cols).astype(float)
    M = np.loadtxt(path, delimiter=",", ndmin=2)
    return check_matrix(M, name=path)
