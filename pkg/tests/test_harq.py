from dataclasses import dataclass, field

import numpy as np
import pytest

from uepharq import cc, harq
from uepharq.channel import ChannelConfig, TrialRng
from uepharq.harq import Crc, FrameLayout, build_frame, make_scheme, run_session, run_sessions, select_j
from uepharq.trellis import build_trellis, viterbi

DEFAULT = FrameLayout.create(500, 1000, 0, 3)
NOISELESS = ChannelConfig(60.0, "fixed", gain=1.0, noise_var=0.0)


def payload(rng, B, layout=DEFAULT):
    return (rng.integers(0, 2, (B, layout.m1_len), dtype=np.uint8),
            rng.integers(0, 2, (B, layout.m2_len), dtype=np.uint8))


def test_select_j():
    assert select_j(500, 0, 500) == 1
    assert select_j(0, 0, 500) == 0
    assert select_j(501, 0, 500) == 2
    with pytest.raises(ValueError):
        select_j(1000, 500, 500, q=3)


def test_default_layout():
    assert (DEFAULT.n_blocks, DEFAULT.j, DEFAULT.ib_capacity) == (500, 1, 500)
    m1, m2 = payload(np.random.default_rng(0), 1)
    layout, blocks = build_frame(m1[0], m2[0], np.zeros(0, dtype=np.uint8), 3)
    assert layout == DEFAULT
    assert blocks.size == 1500
    assert np.array_equal(blocks[:, 0], m1[0])


def test_frame_round_trip_and_zeros():
    rng = np.random.default_rng(1)
    layout = FrameLayout.create(37, 90, 8, 3)
    for _ in range(50):
        m1 = rng.integers(0, 2, 37, dtype=np.uint8)
        m2 = rng.integers(0, 2, 90, dtype=np.uint8)
        m3 = rng.integers(0, 2, 8, dtype=np.uint8)
        out = layout.extract(layout.build(m1, m2, m3))
        assert all(np.array_equal(a, b) for a, b in zip(out, (m1, m2, m3)))
    assert not layout.build(np.zeros(37), np.zeros(90), np.zeros(8)).any()


def test_frame_capacity_rejected():
    with pytest.raises(ValueError):
        FrameLayout.create(1, 8, 0, 3)
    with pytest.raises(ValueError):
        build_frame(np.zeros(10), np.zeros(30), np.zeros(0), 3, n_blocks=5)


def test_genie_crc():
    crc = Crc()
    m1 = np.array([1, 0, 1], dtype=np.uint8)
    assert crc.attach(m1).size == 0
    assert crc.check(m1, [], m1)
    assert not crc.check([1, 1, 1], [], m1)
    with pytest.raises(ValueError):
        crc.check(m1, [])


@pytest.mark.parametrize("name", ["crc8", "crc16", "crc24"])
def test_polynomial_crc(name):
    crc = Crc.parse(name)
    rng = np.random.default_rng(2)
    m1 = rng.integers(0, 2, (20, 64), dtype=np.uint8)
    m3 = crc.attach(m1)
    assert m3.shape == (20, crc.degree)
    assert crc.check(m1, m3).all()
    for pos in range(64 + crc.degree):
        word = np.concatenate([m1, m3], axis=1)
        word[:, pos] ^= 1
        assert not crc.check(word[:, :64], word[:, 64:]).any()


def test_crc16_known_value():
    # CRC-16/XMODEM ("123456789") = 0x31C3
    data = np.unpackbits(np.frombuffer(b"123456789", dtype=np.uint8))
    value = int("".join(map(str, Crc.parse("crc16").attach(data))), 2)
    assert value == 0x31C3


def test_retransmission_rate_and_channel_uses():
    for name in harq.SCHEME_NAMES:
        s = make_scheme(name, DEFAULT)
        if s.kind == "EEPH":
            assert s.retrans is None
            continue
        assert s.retrans.channel_uses == 3006
        assert s.retrans.rate == pytest.approx(500 / 3006)
        assert s.retrans.pattern.block_length == 3018
        assert len(s.retrans.pattern.removed) == 12
    assert make_scheme("UEPH_7", DEFAULT).mother.codeword_length(500) == 3006


def test_named_scheme_scramblers():
    from uepharq.prune import free_distance

    assert free_distance(make_scheme("UEPH_7", DEFAULT).mother, 1) == 7
    assert free_distance(make_scheme("UEPH_6", DEFAULT).mother, 1) == 6
    assert make_scheme("ueph", DEFAULT).name == "UEPH_7"
    with pytest.raises(ValueError):
        make_scheme("HARQ_X", DEFAULT)


@pytest.mark.parametrize("name", harq.SCHEME_NAMES)
def test_noiseless_sessions(name):
    m1, m2 = payload(np.random.default_rng(3), 4)
    s = make_scheme(name, DEFAULT)
    out = run_sessions(s, DEFAULT, m1, m2, NOISELESS, 1, range(4))
    assert out.m1_ok.all() and not out.m1_block_error.any()
    assert not out.m2_bit_errors.any() and not out.retransmissions_used.any()
    assert (out.channel_uses == 3006).all()
    one = run_session(s, DEFAULT, m1[0], m2[0], NOISELESS, TrialRng(1, 0, "unused"))
    assert one.m1_ok and one.m2_bit_errors == 0


@dataclass(frozen=True)
class NackFirst(Crc):
    """Genie CRC that reports a failure on its first check only."""

    calls: list = field(default_factory=list)

    def check(self, m1_hat, m3_hat, m1_ref=None):
        res = super().check(m1_hat, m3_hat, m1_ref)
        if not self.calls:
            res = np.zeros_like(res)
        self.calls.append(1)
        return res


def _with_errors(monkeypatch, positions):
    """Noiseless channel except for sign flips at ``positions`` of the first transmission."""
    original = harq.transmit_batch

    def patched(x, channel, rngs, h=None):
        y, gains = original(x, channel, rngs, h)
        if rngs[0].label == "tx0":
            y[:, positions] *= -1
        return y, gains

    monkeypatch.setattr(harq, "transmit_batch", patched)


def _scheme(name, crc):
    s = make_scheme(name, DEFAULT)
    return harq.SchemeConfig(s.name, s.kind, s.mother, s.retrans, 1, crc)


def test_forced_nack_single_error(monkeypatch):
    _with_errors(monkeypatch, [700])
    m1, m2 = payload(np.random.default_rng(4), 1)
    out = run_sessions(_scheme("UEPH_7", NackFirst()), DEFAULT, m1, m2, NOISELESS, 1, [0])
    assert out.retransmissions_used[0] == 1 and out.m1_ok[0]
    assert out.m2_bit_errors[0] == 0
    assert out.channel_uses[0] == 2 * 3006


def test_projection_rescues_standard_bits(monkeypatch):
    # find three channel errors that defeat the d=6 mother decoder but not the d=7 subcode
    rng = np.random.default_rng(5)
    m1, m2 = payload(rng, 1)
    um = make_scheme("UEPH_7", DEFAULT).mother
    blocks = DEFAULT.build(m1, m2)
    llr = 1.0 - 2.0 * cc.encode_um(um, blocks)[0]
    full, pruned = build_trellis(um, 0), build_trellis(um, 1)
    v = cc.encode_um(um, np.where(np.arange(3) < 1, blocks, 0))[0]
    found = None
    for start in range(600, 640):
        for gap in range(1, 6):
            pos = [start, start + gap, start + 2 * gap]
            r = llr.copy()
            r[pos] *= -1
            if np.array_equal(viterbi(full, r, 500), blocks[0]):
                continue
            if np.array_equal(viterbi(pruned, r * (1 - 2.0 * v), 500)[:, 1:], blocks[0][:, 1:]):
                found = pos
                break
        if found:
            break
    assert found is not None
    _with_errors(monkeypatch, found)
    ueph = run_sessions(_scheme("UEPH_7", NackFirst()), DEFAULT, m1, m2, NOISELESS, 1, [0])
    sep = run_sessions(_scheme("SEPUEPH", NackFirst()), DEFAULT, m1, m2, NOISELESS, 1, [0])
    assert ueph.m2_bit_errors[0] == 0
    assert sep.m2_bit_errors[0] > 0


def test_zero_retransmissions_all_schemes_identical():
    m1, m2 = payload(np.random.default_rng(6), 200)
    ch = ChannelConfig(4.0)
    outs = [run_sessions(make_scheme(n, DEFAULT, max_retransmissions=0), DEFAULT, m1, m2, ch, 3, range(200))
            for n in ("EEPH", "UEPH_7", "SEPUEPH")]
    for o in outs[1:]:
        for f in ("m1_ok", "m1_block_error", "m2_bit_errors", "channel_uses"):
            assert np.array_equal(getattr(o, f), getattr(outs[0], f))
    assert not outs[0].retransmissions_used.any()


def test_paired_ueph_sepueph_and_energy_parity():
    rng = np.random.default_rng(7)
    m1, m2 = payload(rng, 400)
    ch = ChannelConfig(2.0)
    res = {n: run_sessions(make_scheme(n, DEFAULT), DEFAULT, m1, m2, ch, 11, range(400)) for n in harq.SCHEME_NAMES}
    assert np.array_equal(res["UEPH_7"].m1_ok, res["SEPUEPH"].m1_ok)
    assert np.array_equal(res["UEPH_7"].m1_block_error, res["SEPUEPH"].m1_block_error)
    assert res["UEPH_7"].retransmissions_used.any()
    for n in harq.SCHEME_NAMES:
        assert np.array_equal(res[n].channel_uses, 3006 * (1 + res[n].retransmissions_used))
    # first-transmission decisions are shared, so retransmission counts agree wherever scramblers do
    assert np.array_equal(res["EEPH"].retransmissions_used, res["UEPH_7"].retransmissions_used)
    assert (res["UEPH_7"].m2_bit_errors <= res["SEPUEPH"].m2_bit_errors).mean() > 0.95


def test_ueph_beats_sepueph_on_average():
    rng = np.random.default_rng(8)
    m1, m2 = payload(rng, 10_000)
    ch = ChannelConfig(6.0)
    a = run_sessions(make_scheme("UEPH_7", DEFAULT), DEFAULT, m1, m2, ch, 12, range(10_000))
    b = run_sessions(make_scheme("SEPUEPH", DEFAULT), DEFAULT, m1, m2, ch, 12, range(10_000))
    assert a.retransmissions_used.mean() > 0.05
    assert a.m2_bit_errors.sum() < b.m2_bit_errors.sum()


def test_polynomial_crc_session():
    layout = FrameLayout.create(20, 56, 8, 3)
    assert layout.j == 1
    scheme = make_scheme("UEPH_7", layout, crc=Crc.parse("crc8"))
    m1, m2 = payload(np.random.default_rng(9), 300, layout)
    out = run_sessions(scheme, layout, m1, m2, NOISELESS, 1, range(300))
    assert out.m1_ok.all() and not out.m2_bit_errors.any()
    noisy = run_sessions(scheme, layout, m1, m2, ChannelConfig(0.0), 1, range(300))
    assert noisy.retransmissions_used.any()
    # CRC acceptance and true correctness coincide except for rare undetected errors
    assert (noisy.m1_ok == ~noisy.m1_block_error).mean() > 0.98


def test_multiple_retransmissions():
    m1, m2 = payload(np.random.default_rng(10), 300)
    ch = ChannelConfig(0.0)
    for name in ("EEPH", "UEPH_7"):
        one = run_sessions(make_scheme(name, DEFAULT, 1), DEFAULT, m1, m2, ch, 2, range(300))
        three = run_sessions(make_scheme(name, DEFAULT, 3), DEFAULT, m1, m2, ch, 2, range(300))
        assert three.retransmissions_used.max() == 3
        assert three.m1_block_error.sum() <= one.m1_block_error.sum()


def test_scheme_validation():
    um = make_scheme("EEPH", DEFAULT).mother
    with pytest.raises(ValueError):
        harq.SchemeConfig("x", "UEPH", um)
    with pytest.raises(ValueError):
        harq.SchemeConfig("x", "ARQ", um)
    with pytest.raises(ValueError):
        harq.SchemeConfig("x", "EEPH", um, max_retransmissions=-1)
