"""Rate-1/N feed-forward convolutional codes and their unit-memory form.

Octal generators are read MSB-first as taps on the current input and the
``memory`` previous inputs: octal 15 = 1101 means g(D) = 1 + D + D^3.

The unit-memory (UM) form groups ``q = memory`` consecutive inputs into
one block so that ``c_t = b_t G0 + b_{t-1} G1``.  Under the identity
scrambler, element 0 of a block is the earliest input bit of that block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gf2


@dataclass(frozen=True)
class ConvCodeSpec:
    generators: tuple[int, ...]
    memory: int

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(int(g) for g in self.generators))
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if not self.generators:
            raise ValueError("at least one generator is required")
        for g in self.generators:
            if g <= 0 or g >= 1 << (self.memory + 1):
                raise ValueError(f"generator {g:o} does not fit memory {self.memory}")

    @classmethod
    def from_octal(cls, generators, memory: int | None = None) -> "ConvCodeSpec":
        """Build from octal strings/ints, e.g. ``ConvCodeSpec.from_octal("15,17")``.

        ``memory`` defaults to the largest generator degree.
        """
        if isinstance(generators, str):
            generators = [g for g in generators.replace(" ", "").split(",") if g]
        gens = [int(str(g), 8) for g in generators]
        if memory is None:
            memory = max(g.bit_length() for g in gens) - 1
        return cls(tuple(gens), memory)

    @property
    def n_outputs(self) -> int:
        return len(self.generators)

    @property
    def taps(self) -> np.ndarray:
        """(N, memory+1) tap matrix; taps[i, k] multiplies the input delayed by k."""
        q = self.memory
        return np.array([[(g >> (q - k)) & 1 for k in range(q + 1)] for g in self.generators],
                        dtype=np.uint8)

    def octal(self) -> str:
        return ",".join(f"{g:o}" for g in self.generators)


@dataclass(frozen=True, eq=False)
class UmCode:
    g0: np.ndarray
    g1: np.ndarray
    scrambler: np.ndarray
    source: ConvCodeSpec

    @property
    def q(self) -> int:
        return self.source.memory

    @property
    def n_outputs(self) -> int:
        return self.source.n_outputs

    @property
    def n(self) -> int:
        return self.n_outputs * self.q

    @property
    def k(self) -> int:
        return self.q

    def codeword_length(self, n_blocks: int) -> int:
        return (n_blocks + 1) * self.n


@dataclass(frozen=True)
class PuncturePattern:
    block_length: int
    removed: tuple[int, ...] = field(default=())

    def __post_init__(self):
        removed = tuple(int(i) for i in self.removed)
        object.__setattr__(self, "removed", removed)
        if any(b <= a for a, b in zip(removed, removed[1:])):
            raise ValueError("removed indices must be strictly increasing")
        if removed and (removed[0] < 1 or removed[-1] > self.block_length):
            raise ValueError("removed indices must lie in [1, block_length]")

    @property
    def kept_length(self) -> int:
        return self.block_length - len(self.removed)

    def keep_mask(self) -> np.ndarray:
        mask = np.ones(self.block_length, dtype=bool)
        mask[np.asarray(self.removed, dtype=np.int64) - 1] = False
        return mask


def encode_poly(spec: ConvCodeSpec, msg) -> np.ndarray:
    """Shift-register encoding from the all-zero state, no termination.

    ``msg`` may be ``(T,)`` or a batch ``(B, T)``; output bit ``t*N + i``
    belongs to generator ``i`` at time ``t``.
    """
    msg = gf2.as_bits(msg)
    T = msg.shape[-1]
    taps = spec.taps
    out = np.zeros(msg.shape[:-1] + (T, spec.n_outputs), dtype=np.uint8)
    for k in range(spec.memory + 1):
        if k >= T:
            break
        delayed = msg[..., : T - k]
        for i in range(spec.n_outputs):
            if taps[i, k]:
                out[..., k:, i] ^= delayed
    return out.reshape(msg.shape[:-1] + (T * spec.n_outputs,))


def append_tail(msg, q: int) -> np.ndarray:
    msg = gf2.as_bits(msg)
    return np.concatenate([msg, np.zeros(msg.shape[:-1] + (q,), dtype=np.uint8)], axis=-1)


def pad_and_block(msg, q: int) -> np.ndarray:
    """Zero-pad to a multiple of ``q`` and reshape into ``(L, q)`` blocks."""
    if q < 1:
        raise ValueError("q must be >= 1")
    msg = gf2.as_bits(msg)
    n_blocks = -(-msg.shape[-1] // q)
    pad = n_blocks * q - msg.shape[-1]
    if pad:
        msg = np.concatenate([msg, np.zeros(msg.shape[:-1] + (pad,), dtype=np.uint8)], axis=-1)
    return msg.reshape(msg.shape[:-1] + (n_blocks, q))


def to_unit_memory(spec: ConvCodeSpec, scrambler=None) -> UmCode:
    """Unit-memory matrices for ``spec``, left-multiplied by ``scrambler``."""
    q, N = spec.memory, spec.n_outputs
    if scrambler is None:
        scrambler = gf2.identity(q)
    scrambler = gf2.as_bits(scrambler)
    if scrambler.shape != (q, q):
        raise ValueError(f"scrambler must be {q}x{q}")
    if not gf2.det_gf2(scrambler):
        raise ValueError("invalid scrambler: singular over GF(2)")
    taps = spec.taps
    g0 = np.zeros((q, N * q), dtype=np.uint8)
    g1 = np.zeros((q, N * q), dtype=np.uint8)
    for r in range(q):
        for s in range(q):
            for i in range(N):
                # delay from input r of the current block to output step s
                if s >= r:
                    g0[r, s * N + i] = taps[i, s - r]
                # input r of the previous block is q + s - r steps back
                if q + s - r <= q:
                    g1[r, s * N + i] = taps[i, q + s - r]
    g0 = gf2.mat_mul(scrambler, g0)
    g1 = gf2.mat_mul(scrambler, g1)
    for a in (g0, g1, scrambler):
        a.setflags(write=False)
    return UmCode(g0, g1, scrambler.copy(), spec)


def encode_um(um: UmCode, blocks) -> np.ndarray:
    """Encode ``(L, q)`` blocks (or a ``(B, L, q)`` batch) plus one flushing zero block.

    Output length is ``(L + 1) * N * q``.
    """
    blocks = gf2.as_bits(blocks)
    if blocks.ndim < 2 or blocks.shape[-1] != um.q:
        raise ValueError(f"blocks must have shape (..., L, {um.q}), got {blocks.shape}")
    zero = np.zeros(blocks.shape[:-2] + (1, um.q), dtype=np.uint8)
    cur = np.concatenate([blocks, zero], axis=-2)
    prev = np.concatenate([zero, blocks], axis=-2)
    c = gf2.vec_mat_mul(cur, um.g0) ^ gf2.vec_mat_mul(prev, um.g1)
    return c.reshape(blocks.shape[:-2] + (-1,))


def make_equal_spaced_pattern(total: int, count: int) -> PuncturePattern:
    """Remove ``count`` positions at ``ceil(i * total / count)``, i = 1..count."""
    if count < 0 or count > total:
        raise ValueError(f"cannot remove {count} of {total} positions")
    removed = tuple(-(-i * total // count) for i in range(1, count + 1))
    return PuncturePattern(total, removed)


def puncture(cw, p: PuncturePattern) -> np.ndarray:
    cw = np.asarray(cw)
    if cw.shape[-1] != p.block_length:
        raise ValueError(f"codeword length {cw.shape[-1]} != pattern length {p.block_length}")
    return cw[..., p.keep_mask()]


def depuncture(llrs, p: PuncturePattern) -> np.ndarray:
    """Reinsert zero (erased) LLRs at the punctured positions."""
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.shape[-1] != p.kept_length:
        raise ValueError(f"expected {p.kept_length} values, got {llrs.shape[-1]}")
    out = np.zeros(llrs.shape[:-1] + (p.block_length,), dtype=np.float64)
    out[..., p.keep_mask()] = llrs
    return out
