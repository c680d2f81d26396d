"""Trellises and batched soft-input Viterbi decoding.

LLR convention used everywhere in the package: positive means bit 0 is more
likely, zero is an erasure.  The decoder maximises sum(llr * (1 - 2c)), which
is the ML criterion for independent BPSK observations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gf2
from .cc import ConvCodeSpec, UmCode, encode_um

BRUTE_FORCE_MAX_BITS = 16


@dataclass(frozen=True, eq=False)
class Trellis:
    """Dense state-transition description.

    ``outputs[p, s]`` is the branch label emitted when moving from state
    ``p`` to state ``s``; ``valid[p, s]`` tells whether the branch exists.
    The input consumed by a branch is a function of the target state only
    (``labels[s]``), which holds for both UM and shift-register trellises.
    """

    n_states: int
    outputs: np.ndarray  # (S, S, n_out) uint8
    valid: np.ndarray  # (S, S) bool
    labels: np.ndarray  # (S, in_bits) uint8
    tail_steps: int
    level: int = 0

    @property
    def n_out(self) -> int:
        return self.outputs.shape[-1]

    @property
    def in_bits(self) -> int:
        return self.labels.shape[-1]

    def branches_per_state(self) -> int:
        return int(self.valid[0].sum())

    def tail_valid(self) -> np.ndarray:
        zero_input = ~self.labels.any(axis=1)
        return self.valid & zero_input[None, :]


def _pruned_inputs(q: int, level: int) -> np.ndarray:
    """Mask of block values whose first ``level`` bits are all zero."""
    values = np.arange(1 << q)
    return (values & ((1 << level) - 1)) == 0


def um_branch_outputs(um: UmCode) -> np.ndarray:
    """``out[p, b]`` = b G0 + p G1 for every pair of packed blocks."""
    q = um.q
    blocks = np.array([gf2.unpack(v, q) for v in range(1 << q)], dtype=np.uint8)
    cur = gf2.vec_mat_mul(blocks, um.g0)
    prev = gf2.vec_mat_mul(blocks, um.g1)
    return prev[:, None, :] ^ cur[None, :, :]


def build_trellis(um: UmCode, level: int = 0) -> Trellis:
    q = um.q
    if not 0 <= level <= q - 1:
        raise ValueError(f"pruning level must be in [0, {q - 1}], got {level}")
    S = 1 << q
    allowed = _pruned_inputs(q, level)
    valid = np.broadcast_to(allowed[None, :], (S, S)).copy()
    labels = np.array([gf2.unpack(v, q) for v in range(S)], dtype=np.uint8)
    return Trellis(S, um_branch_outputs(um), valid, labels, tail_steps=1, level=level)


def poly_trellis(spec: ConvCodeSpec) -> Trellis:
    """Bit-level shift-register trellis; ``memory`` zero tail bits terminate it.

    State bit k-1 holds the input delayed by k; the newest input enters the LSB.
    """
    q, N = spec.memory, spec.n_outputs
    S = 1 << q
    taps = spec.taps
    outputs = np.zeros((S, S, N), dtype=np.uint8)
    valid = np.zeros((S, S), dtype=bool)
    for p in range(S):
        for u in (0, 1):
            s = ((p << 1) | u) & (S - 1)
            reg = [u] + [(p >> (k - 1)) & 1 for k in range(1, q + 1)]
            outputs[p, s] = (taps @ np.array(reg)) & 1
            valid[p, s] = True
    labels = (np.arange(S) & 1).astype(np.uint8)[:, None]
    return Trellis(S, outputs, valid, labels, tail_steps=q)


def viterbi(trellis: Trellis, llrs, n_steps: int) -> np.ndarray:
    """ML path through ``n_steps`` information steps plus the termination tail.

    ``llrs`` has shape ``(n,)`` or ``(B, n)`` with
    ``n = (n_steps + tail_steps) * n_out``.  Returns the input labels of the
    information steps, shape ``(..., n_steps, in_bits)``.  The path starts and
    ends in state 0.  Equal-metric candidates resolve to the smaller
    predecessor state.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    single = llrs.ndim == 1
    if single:
        llrs = llrs[None, :]
    T = n_steps + trellis.tail_steps
    S, n_out = trellis.n_states, trellis.n_out
    if llrs.shape[1] != T * n_out:
        raise ValueError(f"expected {T * n_out} llrs, got {llrs.shape[1]}")
    B = llrs.shape[0]

    signs = (1.0 - 2.0 * trellis.outputs.reshape(S * S, n_out).astype(np.float64)).T
    mask = np.where(trellis.valid, 0.0, -np.inf).reshape(1, S, S)
    tail_mask = np.where(trellis.tail_valid(), 0.0, -np.inf).reshape(1, S, S)
    steps = llrs.reshape(B, T, n_out)

    metric = np.full((B, S), -np.inf)
    metric[:, 0] = 0.0
    survivors = np.empty((T, B, S), dtype=np.int8 if S <= 128 else np.int32)
    rows = np.arange(B)[:, None]
    cols = np.arange(S)[None, :]
    for t in range(T):
        bm = (steps[:, t, :] @ signs).reshape(B, S, S)
        cand = metric[:, :, None] + bm + (mask if t < n_steps else tail_mask)
        best = np.argmax(cand, axis=1)
        survivors[t] = best
        metric = cand[rows, best, cols]

    states = np.zeros((T, B), dtype=np.int64)
    s = np.zeros(B, dtype=np.int64)
    for t in range(T - 1, -1, -1):
        states[t] = s
        s = survivors[t, np.arange(B), s]
    out = trellis.labels[states[:n_steps].T]  # (B, n_steps, in_bits)
    return out[0] if single else out


def decode_poly(spec: ConvCodeSpec, llrs, n_bits: int, trellis: Trellis | None = None) -> np.ndarray:
    """Viterbi-decode a tail-terminated shift-register codeword into ``n_bits`` bits."""
    tr = trellis if trellis is not None else poly_trellis(spec)
    out = viterbi(tr, llrs, n_bits)
    return out[..., 0]


def correlation(llrs, codewords) -> np.ndarray:
    """sum(llr * (1 - 2c)) for each codeword row."""
    c = np.asarray(codewords, dtype=np.float64)
    return (1.0 - 2.0 * c) @ np.asarray(llrs, dtype=np.float64)


def brute_force_ml(um: UmCode, llrs, n_blocks: int, level: int = 0) -> np.ndarray:
    """Exhaustive ML decoding over every message of the level-``level`` subcode.

    Test oracle.  Messages are enumerated in increasing order of the integer
    formed by their free bits; the first maximiser wins.
    """
    q = um.q
    free = q - level
    n_free = free * n_blocks
    if n_free > BRUTE_FORCE_MAX_BITS:
        raise ValueError(f"{n_free} free bits exceed the brute-force guard of {BRUTE_FORCE_MAX_BITS}")
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.shape[-1] != um.codeword_length(n_blocks):
        raise ValueError("llr length does not match the number of blocks")
    idx = np.arange(1 << n_free, dtype=np.int64)
    bits = ((idx[:, None] >> np.arange(n_free)[None, :]) & 1).astype(np.uint8)
    blocks = np.zeros((idx.size, n_blocks, q), dtype=np.uint8)
    blocks[:, :, level:] = bits.reshape(idx.size, n_blocks, free)
    metrics = correlation(llrs, encode_um(um, blocks))
    return blocks[int(np.argmax(metrics))]


def combine_llrs(copies) -> np.ndarray:
    """Code combining: LLRs of independent observations of one codeword add."""
    copies = [np.asarray(c, dtype=np.float64) for c in copies]
    if not copies:
        raise ValueError("nothing to combine")
    shape = copies[0].shape
    if any(c.shape != shape for c in copies):
        raise ValueError("all copies must have the same length")
    return np.sum(copies, axis=0)
