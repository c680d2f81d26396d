"""Binary vector and matrix arithmetic over GF(2).

Bit sequences are ``numpy.uint8`` arrays holding 0/1.  Where a packed form is
needed (trellis labels, Gaussian elimination) a row of bits is stored in a
Python int with element 0 in the least significant bit.
"""

from __future__ import annotations

import itertools
from typing import Iterator

import numpy as np

MAX_ENUM_SIZE = 5


def as_bits(x) -> np.ndarray:
    """Coerce a sequence of 0/1 values into a read-only uint8 array."""
    a = np.asarray(x, dtype=np.uint8)
    if a.size and a.max() > 1:
        raise ValueError("bit arrays may only contain 0 and 1")
    return a


def pack(bits) -> int:
    """Pack a 1-D bit array into an int, element 0 in the LSB."""
    out = 0
    for i, b in enumerate(np.asarray(bits, dtype=np.uint8).tolist()):
        if b:
            out |= 1 << i
    return out


def unpack(value: int, length: int) -> np.ndarray:
    return np.array([(value >> i) & 1 for i in range(length)], dtype=np.uint8)


def add(a, b) -> np.ndarray:
    a, b = as_bits(a), as_bits(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return a ^ b


def vec_mat_mul(v, m) -> np.ndarray:
    """Row vector times matrix over GF(2).

    ``v`` may also be a stack of row vectors with shape ``(..., r)``.
    """
    v = as_bits(v)
    m = as_bits(m)
    if m.ndim != 2 or v.shape[-1] != m.shape[0]:
        raise ValueError(f"cannot multiply vector of length {v.shape[-1]} by {m.shape} matrix")
    return ((v.astype(np.int64) @ m.astype(np.int64)) & 1).astype(np.uint8)


def mat_mul(a, b) -> np.ndarray:
    a, b = as_bits(a), as_bits(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot multiply {a.shape} by {b.shape}")
    return ((a.astype(np.int64) @ b.astype(np.int64)) & 1).astype(np.uint8)


def identity(size: int) -> np.ndarray:
    return np.eye(size, dtype=np.uint8)


def _rows_packed(m: np.ndarray) -> list[int]:
    return [pack(row) for row in m]


def rank_gf2(m) -> int:
    m = as_bits(m)
    if m.ndim != 2:
        raise ValueError("rank_gf2 expects a matrix")
    rows = _rows_packed(m)
    rank = 0
    for col in range(m.shape[1]):
        pivot = next((r for r in range(rank, len(rows)) if (rows[r] >> col) & 1), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for r in range(len(rows)):
            if r != rank and (rows[r] >> col) & 1:
                rows[r] ^= rows[rank]
        rank += 1
    return rank


def det_gf2(m) -> int:
    """Determinant over GF(2): 1 iff the matrix has full rank."""
    m = as_bits(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"det_gf2 needs a square matrix, got shape {m.shape}")
    return int(rank_gf2(m) == m.shape[0])


def inverse_gf2(m) -> np.ndarray:
    """Gauss-Jordan inverse; raises ValueError for singular input."""
    m = as_bits(m)
    n = m.shape[0]
    if m.ndim != 2 or m.shape[1] != n:
        raise ValueError("inverse_gf2 needs a square matrix")
    work = np.concatenate([m, identity(n)], axis=1)
    for col in range(n):
        pivots = np.nonzero(work[col:, col])[0]
        if pivots.size == 0:
            raise ValueError("matrix is singular over GF(2)")
        p = col + pivots[0]
        work[[col, p]] = work[[p, col]]
        for r in range(n):
            if r != col and work[r, col]:
                work[r] ^= work[col]
    return work[:, n:].copy()


def enumerate_invertible(size: int) -> Iterator[np.ndarray]:
    """Yield every invertible ``size x size`` binary matrix.

    Matrices are visited in lexicographic order of their row-major bit
    pattern, (0,...,0) first, so the identity is *not* first for size > 1.
    """
    if not 1 <= size <= MAX_ENUM_SIZE:
        raise ValueError(f"size must be in [1, {MAX_ENUM_SIZE}], got {size}")
    for pattern in itertools.product((0, 1), repeat=size * size):
        m = np.array(pattern, dtype=np.uint8).reshape(size, size)
        if det_gf2(m):
            m.setflags(write=False)
            yield m


def parse_matrix(text: str, size: int) -> np.ndarray:
    """Parse a row-major bit string such as ``"100010001"`` (separators ignored)."""
    digits = [c for c in text if c in "01"]
    if len(digits) != size * size:
        raise ValueError(f"expected {size * size} bits for a {size}x{size} matrix, got {len(digits)}")
    return np.array([int(c) for c in digits], dtype=np.uint8).reshape(size, size)


def format_matrix(m) -> str:
    return "".join(str(int(b)) for b in np.asarray(m).ravel())
