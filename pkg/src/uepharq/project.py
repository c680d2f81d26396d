"""Projection of a mother-code codeword onto a pruned subcode.

For UM input blocks ``b_t`` and pruning level ``j`` the mother codeword
splits as ``c_A = c_P + v`` where ``c_P`` encodes the blocks with their
first ``j`` bits cleared and ``v`` encodes only those first ``j`` bits.
``v`` is carried by the ``j * L`` bits ``v0``, which is what gets
retransmitted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gf2
from .cc import UmCode, encode_um


@dataclass(frozen=True, eq=False)
class OffsetPair:
    v: np.ndarray
    v0: np.ndarray


def _check_level(um: UmCode, j: int):
    if not 0 <= j <= um.q - 1:
        raise ValueError(f"pruning level must be in [0, {um.q - 1}], got {j}")


def _blocks(um: UmCode, blocks) -> np.ndarray:
    blocks = gf2.as_bits(blocks)
    if blocks.ndim < 2 or blocks.shape[-1] != um.q:
        raise ValueError(f"blocks must have shape (..., L, {um.q})")
    return blocks


def project_codeword(um: UmCode, blocks, j: int) -> np.ndarray:
    """c_P: encode the blocks with their first ``j`` bits cleared."""
    _check_level(um, j)
    b = _blocks(um, blocks).copy()
    b[..., :j] = 0
    return encode_um(um, b)


def compute_offset(um: UmCode, blocks, j: int) -> OffsetPair:
    _check_level(um, j)
    b = _blocks(um, blocks)
    head = np.zeros_like(b)
    head[..., :j] = b[..., :j]
    v0 = b[..., :j].reshape(b.shape[:-2] + (-1,)).copy()
    return OffsetPair(encode_um(um, head), v0)


def expand_offset(v0, j: int, um: UmCode, n_blocks: int) -> np.ndarray:
    """Rebuild v from its compact form by zero-filling each block and re-encoding."""
    _check_level(um, j)
    v0 = gf2.as_bits(v0)
    if v0.shape[-1] != j * n_blocks:
        raise ValueError(f"v0 must have {j * n_blocks} bits, got {v0.shape[-1]}")
    blocks = np.zeros(v0.shape[:-1] + (n_blocks, um.q), dtype=np.uint8)
    blocks[..., :j] = v0.reshape(v0.shape[:-1] + (n_blocks, j))
    return encode_um(um, blocks)


def hard_project(received, v_hat) -> np.ndarray:
    return gf2.add(received, v_hat)


def soft_project(llrs, v_hat) -> np.ndarray:
    """Flip the sign of every LLR where the offset bit is 1."""
    llrs = np.asarray(llrs, dtype=np.float64)
    v_hat = gf2.as_bits(v_hat)
    if llrs.shape != v_hat.shape:
        raise ValueError(f"length mismatch: {llrs.shape} vs {v_hat.shape}")
    return llrs * (1.0 - 2.0 * v_hat)
