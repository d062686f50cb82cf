"""Self-describing binary dump for complex matrices.

Layout (little-endian):

====== ======= ====================================================
offset size    content
====== ======= ====================================================
0      8       magic ``b"ALMX1\\x00\\x00\\x00"``
8      8       rows, unsigned 64-bit
16     8       cols, unsigned 64-bit
24     16*r*c  row-major entries, each an IEEE-754 double pair
               (real part, imaginary part)
====== ======= ====================================================

The format is what the CLI uses for reproducible operator exchange
(custom Hamiltonian terms, stored witnesses).
"""

from __future__ import annotations

import struct

import numpy as np

from .core import as_complex_matrix
from .errors import ShapeError

MAGIC = b"ALMX1\x00\x00\x00"
_HEADER = struct.Struct("<8sQQ")


def dump_matrix(m) -> bytes:
    arr = as_complex_matrix(m)
    rows, cols = arr.shape
    body = np.empty((rows, cols, 2), dtype="<f8")
    body[:, :, 0] = arr.real
    body[:, :, 1] = arr.imag
    return _HEADER.pack(MAGIC, rows, cols) + body.tobytes()


def parse_matrix(data: bytes) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise ShapeError("matrix dump too short for header")
    magic, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ShapeError(f"bad matrix dump magic {magic!r}")
    expected = _HEADER.size + 16 * rows * cols
    if len(data) != expected:
        raise ShapeError(
            f"matrix dump length {len(data)} != expected {expected} "
            f"for {rows}x{cols}"
        )
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    body = body.reshape(rows, cols, 2)
    return (body[:, :, 0] + 1j * body[:, :, 1]).astype(complex)


def save_matrix(path, m):
    with open(path, "wb") as fh:
        fh.write(dump_matrix(m))


def load_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return parse_matrix(fh.read())
