"""UEP-HARQ protocols: the proposed projection scheme (UEPH) and two references.

All three schemes send the same mother-code codeword first.  On a NACK:

* ``UEPH``    sends the important bits (compact offset v0) through the
  retransmission code, then projects the first transmission onto the pruned
  subcode and re-decodes the standard bits on the pruned trellis.
* ``SEPUEPH`` sends the same retransmission but never revisits the standard
  bits.
* ``EEPH``    resends the mother codeword and decodes the LLR sum.

Sessions are simulated in batches: every array argument carries one row per
trial and every trial row gets its own counter-based random stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import cc, gf2
from .cc import ConvCodeSpec, PuncturePattern, UmCode
from .channel import ChannelConfig, TrialRng, demodulate, modulate, transmit_batch
from .project import compute_offset, expand_offset, soft_project
from .prune import search_scrambler, suboptimal_scrambler
from .trellis import build_trellis, decode_poly, poly_trellis, viterbi

KINDS = ("UEPH", "SEPUEPH", "EEPH")

MOTHER_CODE = "15,17"
RETRANSMISSION_CODE = "15,17,13,15,17,13"


# --- CRC -----------------------------------------------------------------

NAMED_CRCS = {"crc8": (0x07, 8), "crc16": (0x1021, 16), "crc24": (0x864CFB, 24)}


@dataclass(frozen=True)
class Crc:
    """``genie`` compares against the transmitted bits and adds no parity.

    ``poly`` is an MSB-first CRC with generator ``x^degree + poly``.
    """

    kind: str = "genie"
    poly: int = 0
    degree: int = 0

    @classmethod
    def parse(cls, text: str) -> "Crc":
        text = text.strip().lower()
        if text in ("genie", "ideal", "ideal_genie"):
            return cls()
        if text in NAMED_CRCS:
            poly, degree = NAMED_CRCS[text]
            return cls("poly", poly, degree)
        if text.startswith("poly:"):
            _, poly, degree = text.split(":")
            return cls("poly", int(poly, 0), int(degree))
        raise ValueError(f"unknown CRC spec {text!r}")

    @property
    def length(self) -> int:
        return self.degree if self.kind == "poly" else 0

    def attach(self, m1) -> np.ndarray:
        """Parity bits m3 for ``m1`` (shape ``(..., n)``)."""
        m1 = gf2.as_bits(m1)
        lead = m1.shape[:-1]
        if self.kind == "genie":
            return np.zeros(lead + (0,), dtype=np.uint8)
        flat = m1.reshape(-1, m1.shape[-1])
        reg = np.zeros(flat.shape[0], dtype=np.int64)
        mask = (1 << self.degree) - 1
        top = self.degree - 1
        for i in range(flat.shape[1]):
            fb = ((reg >> top) & 1) ^ flat[:, i]
            reg = ((reg << 1) & mask) ^ np.where(fb == 1, self.poly, 0)
        bits = ((reg[:, None] >> np.arange(top, -1, -1)[None, :]) & 1).astype(np.uint8)
        return bits.reshape(lead + (self.degree,))

    def check(self, m1_hat, m3_hat, m1_ref=None) -> np.ndarray:
        """Per-row pass/fail.  Genie mode needs the transmitted ``m1_ref``."""
        m1_hat = gf2.as_bits(m1_hat)
        if self.kind == "genie":
            if m1_ref is None:
                raise ValueError("genie CRC needs the reference bits")
            return np.all(m1_hat == gf2.as_bits(m1_ref), axis=-1)
        return np.all(self.attach(m1_hat) == gf2.as_bits(m3_hat), axis=-1)


# --- framing -------------------------------------------------------------

def select_j(m1_len: int, m3_len: int, n_blocks: int, q: int | None = None) -> int:
    """Smallest pruning level whose compact offset can carry m1 and m3."""
    if n_blocks < 1:
        raise ValueError("need at least one block")
    j = -(-(m1_len + m3_len) // n_blocks)
    if q is not None and j >= q:
        raise ValueError(f"m1+m3 = {m1_len + m3_len} bits need j = {j} >= q = {q}: no usable subcode")
    return j


@dataclass(frozen=True)
class FrameLayout:
    """Placement of m1, m3 (first ``j`` bits of each block) and m2 (the rest)."""

    m1_len: int
    m2_len: int
    m3_len: int
    q: int
    n_blocks: int
    j: int

    @classmethod
    def create(cls, m1_len: int, m2_len: int, m3_len: int, q: int) -> "FrameLayout":
        total = m1_len + m2_len + m3_len
        n_blocks = max(1, -(-total // q))
        j = select_j(m1_len, m3_len, n_blocks, q)
        if m2_len > (q - j) * n_blocks:
            raise ValueError(f"m2 ({m2_len} bits) does not fit the {(q - j) * n_blocks} standard positions")
        return cls(m1_len, m2_len, m3_len, q, n_blocks, j)

    @property
    def ib_capacity(self) -> int:
        return self.j * self.n_blocks

    def build(self, m1, m2, m3=None) -> np.ndarray:
        """Arrange payloads into ``(..., L, q)`` blocks, t-major within each region."""
        m1, m2 = gf2.as_bits(m1), gf2.as_bits(m2)
        lead = m1.shape[:-1]
        if m3 is None:
            m3 = np.zeros(lead + (0,), dtype=np.uint8)
        m3 = gf2.as_bits(m3)
        if (m1.shape[-1], m2.shape[-1], m3.shape[-1]) != (self.m1_len, self.m2_len, self.m3_len):
            raise ValueError("payload lengths do not match the layout")
        L, q, j = self.n_blocks, self.q, self.j
        head = np.zeros(lead + (L * j,), dtype=np.uint8)
        head[..., : self.m1_len] = m1
        head[..., self.m1_len : self.m1_len + self.m3_len] = m3
        rest = np.zeros(lead + (L * (q - j),), dtype=np.uint8)
        rest[..., : self.m2_len] = m2
        blocks = np.empty(lead + (L, q), dtype=np.uint8)
        blocks[..., :j] = head.reshape(lead + (L, j))
        blocks[..., j:] = rest.reshape(lead + (L, q - j))
        return blocks

    def extract_head(self, head):
        """Split the compact offset (first j bits of every block) into (m1, m3)."""
        head = np.asarray(head)
        return head[..., : self.m1_len], head[..., self.m1_len : self.m1_len + self.m3_len]

    def extract(self, blocks):
        blocks = np.asarray(blocks)
        lead = blocks.shape[:-2]
        head = blocks[..., : self.j].reshape(lead + (-1,))
        rest = blocks[..., self.j :].reshape(lead + (-1,))
        m1, m3 = self.extract_head(head)
        return m1, rest[..., : self.m2_len], m3


def build_frame(m1, m2, m3, q: int, n_blocks: int | None = None):
    """Layout plus arranged blocks for one payload triple."""
    m1, m2, m3 = gf2.as_bits(m1), gf2.as_bits(m2), gf2.as_bits(m3)
    if n_blocks is None:
        layout = FrameLayout.create(m1.shape[-1], m2.shape[-1], m3.shape[-1], q)
    else:
        j = select_j(m1.shape[-1], m3.shape[-1], n_blocks, q)
        if m2.shape[-1] > (q - j) * n_blocks:
            raise ValueError("m2 does not fit the frame")
        layout = FrameLayout(m1.shape[-1], m2.shape[-1], m3.shape[-1], q, n_blocks, j)
    return layout, layout.build(m1, m2, m3)


# --- schemes -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RetransmissionCode:
    """Tail-terminated feed-forward code punctured to a fixed block length."""

    spec: ConvCodeSpec
    payload_len: int
    pattern: PuncturePattern

    @classmethod
    def fit(cls, spec: ConvCodeSpec, payload_len: int, channel_uses: int) -> "RetransmissionCode":
        total = (payload_len + spec.memory) * spec.n_outputs
        if total < channel_uses:
            raise ValueError(f"retransmission code yields {total} bits, fewer than {channel_uses} channel uses")
        return cls(spec, payload_len, cc.make_equal_spaced_pattern(total, total - channel_uses))

    @property
    def channel_uses(self) -> int:
        return self.pattern.kept_length

    @property
    def rate(self) -> float:
        return self.payload_len / self.channel_uses

    def encode(self, payload) -> np.ndarray:
        return cc.puncture(cc.encode_poly(self.spec, cc.append_tail(payload, self.spec.memory)), self.pattern)


@dataclass(frozen=True, eq=False)
class SchemeConfig:
    name: str
    kind: str
    mother: UmCode
    retrans: RetransmissionCode | None = None
    max_retransmissions: int = 1
    crc: Crc = field(default_factory=Crc)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.max_retransmissions < 0:
            raise ValueError("max_retransmissions must be >= 0")
        if self.kind != "EEPH" and self.retrans is None:
            raise ValueError(f"{self.kind} needs a retransmission code")


@dataclass
class SessionOutcome:
    m1_ok: bool
    m1_block_error: bool
    m2_bit_errors: int
    retransmissions_used: int
    channel_uses: int


@dataclass
class SessionBatch:
    """Per-trial outcome arrays; row i is trial i of the batch."""

    m1_ok: np.ndarray
    m1_block_error: np.ndarray
    m2_bit_errors: np.ndarray
    retransmissions_used: np.ndarray
    channel_uses: np.ndarray

    def __len__(self):
        return len(self.m1_ok)

    def outcome(self, i: int) -> SessionOutcome:
        return SessionOutcome(bool(self.m1_ok[i]), bool(self.m1_block_error[i]), int(self.m2_bit_errors[i]),
                              int(self.retransmissions_used[i]), int(self.channel_uses[i]))


@lru_cache(maxsize=None)
def _trellis(um: UmCode, level: int):
    return build_trellis(um, level)


@lru_cache(maxsize=None)
def _poly_trellis(spec: ConvCodeSpec):
    return poly_trellis(spec)


def _rngs(seed: int, point: int, trials, label: str):
    return [TrialRng(seed, int(t), label, point) for t in trials]


def run_sessions(cfg: SchemeConfig, layout: FrameLayout, m1, m2, channel: ChannelConfig,
                 seed: int, trials, point: int = 0) -> SessionBatch:
    """Run one HARQ session per row of ``m1``/``m2``.

    Transmission ``r`` of trial ``t`` draws its fade and noise from
    ``TrialRng(seed, t, f"tx{r}", point)``, so different schemes see the same
    channel whenever they are called with the same keys.
    """
    m1, m2 = np.atleast_2d(gf2.as_bits(m1)), np.atleast_2d(gf2.as_bits(m2))
    trials = np.asarray(trials, dtype=np.int64)
    B = m1.shape[0]
    um, L, j = cfg.mother, layout.n_blocks, layout.j
    if um.q != layout.q:
        raise ValueError("layout block size differs from the mother code memory")
    if cfg.crc.length != layout.m3_len:
        raise ValueError("CRC length does not match the layout's m3 length")
    if cfg.retrans is not None and cfg.kind != "EEPH" and cfg.retrans.payload_len != layout.ib_capacity:
        raise ValueError("retransmission code payload must equal j*L")

    m3 = cfg.crc.attach(m1)
    blocks = layout.build(m1, m2, m3)
    c = cc.encode_um(um, blocks)
    M = c.shape[-1]
    full = _trellis(um, 0)

    y0, h0 = transmit_batch(modulate(c), channel, _rngs(seed, point, trials, "tx0"))
    llr0 = demodulate(y0, h0, channel.noise_var)
    m1_hat, m2_hat, m3_hat = layout.extract(viterbi(full, llr0, L))
    ok = cfg.crc.check(m1_hat, m3_hat, m1)
    m1_final, m2_final = m1_hat.copy(), m2_hat.copy()
    retx = np.zeros(B, dtype=np.int64)
    uses = np.full(B, M, dtype=np.int64)
    pending = ~ok

    if cfg.kind == "EEPH":
        acc = llr0.copy()
    else:
        rc = cfg.retrans
        v0 = compute_offset(um, blocks, j).v0
        acc = np.zeros((B, rc.pattern.block_length))
        known_zero = np.arange(layout.ib_capacity) >= layout.m1_len + layout.m3_len
        if cfg.kind == "UEPH":
            pruned = _trellis(um, j)

    for r in range(1, cfg.max_retransmissions + 1):
        idx = np.nonzero(pending)[0]
        if idx.size == 0:
            break
        retx[idx] += 1
        rngs = _rngs(seed, point, trials[idx], f"tx{r}")
        fades = h0[idx] if channel.identical_fades else None
        if cfg.kind == "EEPH":
            y, h = transmit_batch(modulate(c[idx]), channel, rngs, fades)
            acc[idx] += demodulate(y, h, channel.noise_var)
            m1_r, m2_r, m3_r = layout.extract(viterbi(full, acc[idx], L))
            m2_final[idx] = m2_r
        else:
            x = modulate(rc.encode(v0[idx]))
            y, h = transmit_batch(x, channel, rngs, fades)
            uses_r = x.shape[-1]
            acc[idx] += cc.depuncture(demodulate(y, h, channel.noise_var), rc.pattern)
            v0_hat = decode_poly(rc.spec, acc[idx], rc.payload_len, _poly_trellis(rc.spec))
            v0_hat[:, known_zero] = 0
            m1_r, m3_r = layout.extract_head(v0_hat)
        ok_r = cfg.crc.check(m1_r, m3_r, m1[idx])
        m1_final[idx] = m1_r
        uses[idx] += M if cfg.kind == "EEPH" else uses_r

        if cfg.kind == "UEPH" and ok_r.any():
            sel = idx[ok_r]
            v_hat = expand_offset(v0_hat[ok_r], j, um, L)
            projected = soft_project(llr0[sel], v_hat)
            m2_final[sel] = layout.extract(viterbi(pruned, projected, L))[1]

        ok[idx] = ok_r
        pending[idx] = ~ok_r

    return SessionBatch(
        m1_ok=ok,
        m1_block_error=np.any(m1_final != m1, axis=-1),
        m2_bit_errors=np.sum(m2_final != m2, axis=-1).astype(np.int64),
        retransmissions_used=retx,
        channel_uses=uses,
    )


def run_session(cfg: SchemeConfig, layout: FrameLayout, m1, m2, channel: ChannelConfig,
                rng: TrialRng) -> SessionOutcome:
    """Single-trial convenience wrapper around :func:`run_sessions`."""
    batch = run_sessions(cfg, layout, np.atleast_2d(m1), np.atleast_2d(m2), channel,
                         rng.seed, [rng.trial], rng.point)
    return batch.outcome(0)


# --- the simulated configurations ----------------------------------------

SCHEME_NAMES = ("EEPH", "UEPH_7", "UEPH_6", "SEPUEPH")
ALIASES = {"UEPH": "UEPH_7", "UEPH_OPT": "UEPH_7", "UEPH_SUB": "UEPH_6"}


@lru_cache(maxsize=None)
def _scramblers(mother: ConvCodeSpec, j: int):
    if j == 0:
        ident = gf2.identity(mother.memory)
        return ident, ident
    best = search_scrambler(mother, j).scrambler
    sub = suboptimal_scrambler(mother, 1, 6) if j == 1 and mother == ConvCodeSpec.from_octal(MOTHER_CODE) \
        else gf2.identity(mother.memory)
    return best, sub


@lru_cache(maxsize=None)
def _um(mother: ConvCodeSpec, scrambler: str) -> UmCode:
    return cc.to_unit_memory(mother, gf2.parse_matrix(scrambler, mother.memory))


def make_scheme(name: str, layout: FrameLayout, max_retransmissions: int = 1, crc: Crc | None = None,
                mother: ConvCodeSpec | None = None, retrans: ConvCodeSpec | None = None) -> SchemeConfig:
    """Named configurations.

    ``UEPH_7`` / ``SEPUEPH`` / ``EEPH`` use the scrambler that maximises the
    level-j subcode distance, ``UEPH_6`` the sub-optimal one (identity).
    """
    key = ALIASES.get(name.upper(), name.upper())
    if key not in SCHEME_NAMES:
        raise ValueError(f"unknown scheme {name!r}; choose from {', '.join(SCHEME_NAMES)}")
    mother = mother or ConvCodeSpec.from_octal(MOTHER_CODE)
    retrans = retrans or ConvCodeSpec.from_octal(RETRANSMISSION_CODE)
    crc = crc or Crc()
    best, sub = _scramblers(mother, layout.j)
    um = _um(mother, gf2.format_matrix(sub if key == "UEPH_6" else best))
    kind = {"EEPH": "EEPH", "SEPUEPH": "SEPUEPH"}.get(key, "UEPH")
    rc = None
    if kind != "EEPH":
        rc = RetransmissionCode.fit(retrans, layout.ib_capacity, um.codeword_length(layout.n_blocks))
    return SchemeConfig(key, kind, um, rc, max_retransmissions, crc)
