"""Monte Carlo engine: SNR sweeps over paired HARQ sessions, CSV output."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .cc import ConvCodeSpec
from .channel import FADINGS, ChannelConfig, TrialRng
from .harq import (ALIASES, MOTHER_CODE, RETRANSMISSION_CODE, SCHEME_NAMES, Crc, FrameLayout, SessionBatch,
                   make_scheme, run_sessions)

CSV_HEADER = ["scheme", "snr_db", "trials", "m1_bler", "m1_bler_ci95", "m2_ber", "m2_ber_ci95", "mean_retx"]
Z95 = 1.96


@dataclass(frozen=True)
class SimConfig:
    schemes: tuple = SCHEME_NAMES
    snr_points_db: tuple = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0)
    trials: int = 10_000
    max_retransmissions: int = 1
    seed: int = 1
    fading: str = "block_rayleigh"
    fixed_gain: float | None = None
    identical_fades: bool = False
    m1_len: int = 500
    m2_len: int = 1000
    crc: str = "genie"
    mother: str = MOTHER_CODE
    retrans: str = RETRANSMISSION_CODE
    workers: int = 1
    chunk: int = 1000
    out: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "snr_points_db", tuple(float(s) for s in self.snr_points_db))

    def validate(self):
        """Raise ValueError for anything that would fail mid-run."""
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.schemes:
            raise ValueError("no schemes configured")
        if not self.snr_points_db:
            raise ValueError("no SNR points configured")
        if self.fading not in FADINGS:
            raise ValueError(f"unknown fading model {self.fading!r}")
        if self.workers < 1 or self.chunk < 1:
            raise ValueError("workers and chunk must be >= 1")
        if len({ALIASES.get(s.upper(), s.upper()) for s in self.schemes}) != len(self.schemes):
            raise ValueError("duplicate scheme in the list")
        self.build_schemes()

    def layout(self) -> FrameLayout:
        q = ConvCodeSpec.from_octal(self.mother).memory
        return FrameLayout.create(self.m1_len, self.m2_len, Crc.parse(self.crc).length, q)

    def build_schemes(self):
        layout = self.layout()
        mother = ConvCodeSpec.from_octal(self.mother)
        retrans = ConvCodeSpec.from_octal(self.retrans)
        crc = Crc.parse(self.crc)
        return layout, [make_scheme(s, layout, self.max_retransmissions, crc, mother, retrans)
                        for s in self.schemes]

    def channel(self, snr_db: float) -> ChannelConfig:
        return ChannelConfig(snr_db, self.fading, self.fixed_gain, identical_fades=self.identical_fades)


@dataclass(frozen=True)
class MetricsRow:
    scheme: str
    snr_db: float
    trials: int
    m1_bler: float
    m1_bler_ci95: float
    m2_ber: float
    m2_ber_ci95: float
    mean_retx: float


@dataclass
class MetricsTable:
    rows: list = field(default_factory=list)

    def row(self, scheme: str, snr_db: float) -> MetricsRow:
        for r in self.rows:
            if r.scheme == scheme and r.snr_db == snr_db:
                return r
        raise KeyError((scheme, snr_db))


def half_width(p: float, n: int) -> float:
    return Z95 * math.sqrt(p * (1.0 - p) / n) if n else 0.0


def summarize(scheme: str, snr_db: float, batch: SessionBatch, m2_len: int) -> MetricsRow:
    n = len(batch)
    bler = float(batch.m1_block_error.sum()) / n
    n_bits = n * m2_len
    ber = float(batch.m2_bit_errors.sum()) / n_bits if n_bits else 0.0
    return MetricsRow(scheme, float(snr_db), n, bler, half_width(bler, n), ber, half_width(ber, n_bits),
                      float(batch.retransmissions_used.sum()) / n)


def payloads(cfg: SimConfig, point: int, trials) -> tuple[np.ndarray, np.ndarray]:
    bits = np.stack([TrialRng(cfg.seed, int(t), "payload", point).generator()
                     .integers(0, 2, cfg.m1_len + cfg.m2_len, dtype=np.uint8) for t in trials])
    return bits[:, : cfg.m1_len], bits[:, cfg.m1_len :]


def _run_chunk(cfg: SimConfig, point: int, start: int, stop: int) -> dict:
    layout, schemes = cfg.build_schemes()
    trials = np.arange(start, stop)
    m1, m2 = payloads(cfg, point, trials)
    channel = cfg.channel(cfg.snr_points_db[point])
    return {s.name: run_sessions(s, layout, m1, m2, channel, cfg.seed, trials, point) for s in schemes}


def _concat(parts: list) -> SessionBatch:
    return SessionBatch(*(np.concatenate([getattr(p, f.name) for p in parts])
                          for f in fields(SessionBatch)))


def simulate(cfg: SimConfig) -> dict:
    """Per-trial outcomes keyed by ``(scheme name, point index)``.

    Every scheme at a point sees the same payloads and channel draws for a
    given trial index.  Results do not depend on ``workers`` or ``chunk``.
    """
    cfg.validate()
    names = [s.name for s in cfg.build_schemes()[1]]
    tasks = [(p, a, min(a + cfg.chunk, cfg.trials))
             for p in range(len(cfg.snr_points_db)) for a in range(0, cfg.trials, cfg.chunk)]
    if cfg.workers == 1:
        results = [_run_chunk(cfg, *t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_chunk, [cfg] * len(tasks), *zip(*tasks)))
    out = {}
    for name in names:
        for p in range(len(cfg.snr_points_db)):
            out[name, p] = _concat([r[name] for t, r in zip(tasks, results) if t[0] == p])
    return out


def table_from_batches(cfg: SimConfig, batches: dict) -> MetricsTable:
    names = []
    for name, _ in batches:
        if name not in names:
            names.append(name)
    order = sorted(range(len(cfg.snr_points_db)), key=lambda p: cfg.snr_points_db[p])
    return MetricsTable([summarize(n, cfg.snr_points_db[p], batches[n, p], cfg.m2_len)
                         for n in names for p in order])


def run_monte_carlo(cfg: SimConfig) -> MetricsTable:
    return table_from_batches(cfg, simulate(cfg))


def _fmt(x) -> str:
    return str(x) if isinstance(x, int) else f"{x:.16e}"


def write_csv(table: MetricsTable, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in table.rows:
        w.writerow([r.scheme] + [_fmt(getattr(r, k)) for k in CSV_HEADER[1:]])


def emit_csv(table: MetricsTable, path) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            write_csv(table, fh)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path) -> MetricsTable:
    rows = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        for rec in reader:
            rows.append(MetricsRow(rec["scheme"], float(rec["snr_db"]), int(rec["trials"]),
                                   *(float(rec[k]) for k in CSV_HEADER[3:])))
    return MetricsTable(rows)


# --- config files ----------------------------------------------------------

def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def snr_grid(start: float, stop: float, step: float) -> tuple:
    if step <= 0:
        raise ValueError("snr step must be positive")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    if n < 1:
        raise ValueError("empty SNR grid")
    return tuple(round(start + i * step, 10) for i in range(n))


_SCALARS = {
    "trials": int, "seed": int, "max_retx": int, "max_retransmissions": int, "workers": int, "chunk": int,
    "m1_len": int, "m2_len": int, "fading": str, "crc": str, "mother": str, "retrans": str, "out": str,
    "fixed_gain": float, "identical_fades": _bool,
}


def parse_config(text: str, base: SimConfig | None = None) -> SimConfig:
    """Flat ``key = value`` format; ``#`` starts a comment.

    Besides the scalar keys, ``schemes`` and ``snr_points`` take
    comma-separated lists and ``snr_start``/``snr_stop``/``snr_step`` build a
    grid.  ``m3_len``, if given, must equal the CRC length.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key.lower()] = val
    return apply_overrides(base or SimConfig(), values)


def apply_overrides(cfg: SimConfig, values: dict) -> SimConfig:
    values = {k: v for k, v in values.items() if v is not None}
    changes = {}
    grid = {}
    m3_len = None
    for key, val in values.items():
        if key == "schemes":
            changes["schemes"] = tuple(s.strip() for s in str(val).split(",") if s.strip())
        elif key == "snr_points":
            changes["snr_points_db"] = tuple(float(s) for s in str(val).split(",") if s.strip())
        elif key in ("snr_start", "snr_stop", "snr_step"):
            grid[key] = float(val)
        elif key == "m3_len":
            m3_len = int(val)
        elif key in _SCALARS:
            name = "max_retransmissions" if key == "max_retx" else key
            changes[name] = _SCALARS[key](val) if isinstance(val, str) else val
        else:
            raise ValueError(f"unknown config key {key!r}")
    if grid:
        changes["snr_points_db"] = snr_grid(grid.get("snr_start", 0.0), grid.get("snr_stop", 12.0),
                                            grid.get("snr_step", 2.0))
    cfg = replace(cfg, **changes)
    if m3_len is not None and m3_len != Crc.parse(cfg.crc).length:
        raise ValueError(f"m3_len = {m3_len} does not match the CRC length {Crc.parse(cfg.crc).length}")
    return cfg
