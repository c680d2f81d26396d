"""Unequal-error-protection HARQ built on pruned convolutional codes."""

from .cc import ConvCodeSpec, UmCode, encode_poly, encode_um, to_unit_memory
from .channel import ChannelConfig, TrialRng
from .harq import FrameLayout, SchemeConfig, make_scheme, run_session, run_sessions
from .prune import free_distance, search_scrambler
from .sim import MetricsTable, SimConfig, emit_csv, read_csv, run_monte_carlo, simulate
from .trellis import build_trellis, viterbi

__version__ = "0.1.0"
