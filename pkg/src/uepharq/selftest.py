"""Fast oracle-equivalence and identity checks behind ``uepharq selftest``."""

from __future__ import annotations

import itertools

import numpy as np

from . import cc
from .cc import ConvCodeSpec
from .project import compute_offset, expand_offset, hard_project, project_codeword, soft_project
from .prune import free_distance, search_scrambler
from .trellis import brute_force_ml, build_trellis, viterbi


def _distances():
    got = (free_distance(ConvCodeSpec.from_octal("15,17")),
           free_distance(ConvCodeSpec.from_octal("15,17,15,17")),
           free_distance(ConvCodeSpec.from_octal("15,17,13,15,17,13")),
           search_scrambler(ConvCodeSpec.from_octal("15,17"), 1).distances[1],
           free_distance(cc.to_unit_memory(ConvCodeSpec.from_octal("15,17")), 1))
    return got == (6, 12, 20, 7, 6), f"d_A, d_K, d_IR, best d_1, identity d_1 = {got}"


def _encoder_equivalence():
    spec = ConvCodeSpec.from_octal("15,17")
    um = cc.to_unit_memory(spec)
    for n_blocks in (1, 2, 3):
        msgs = np.array(list(itertools.product((0, 1), repeat=3 * n_blocks)), dtype=np.uint8)
        um_out = cc.encode_um(um, msgs.reshape(-1, n_blocks, 3))
        poly_out = cc.encode_poly(spec, cc.append_tail(msgs, 3))
        if not np.array_equal(um_out, poly_out):
            return False, f"mismatch at L={n_blocks}"
    return True, "UM encoder equals shift-register encoder for all inputs up to 9 bits"


def _viterbi_vs_brute_force(rng, cases=100):
    um = cc.to_unit_memory(ConvCodeSpec.from_octal("15,17"), search_scrambler(ConvCodeSpec.from_octal("15,17"), 1).scrambler)
    for j in range(3):
        tr = build_trellis(um, j)
        for _ in range(cases):
            n_blocks = int(rng.integers(1, 16 // (3 - j) + 1))
            llrs = rng.normal(size=um.codeword_length(n_blocks))
            if not np.array_equal(viterbi(tr, llrs, n_blocks), brute_force_ml(um, llrs, n_blocks, j)):
                return False, f"disagreement at level {j}, L={n_blocks}"
    return True, f"{3 * cases} random instances agree"


def _projection_identities(rng, cases=100):
    um = cc.to_unit_memory(ConvCodeSpec.from_octal("15,17"))
    for _ in range(cases):
        n_blocks = int(rng.integers(1, 40))
        j = int(rng.integers(0, 3))
        blocks = rng.integers(0, 2, (n_blocks, 3), dtype=np.uint8)
        c = cc.encode_um(um, blocks)
        off = compute_offset(um, blocks, j)
        if np.any(c ^ project_codeword(um, blocks, j) ^ off.v):
            return False, "c_A != c_P + v"
        if not np.array_equal(expand_offset(off.v0, j, um, n_blocks), off.v):
            return False, "expand(v0) != v"
        llrs = rng.normal(size=c.size)
        hard = (llrs < 0).astype(np.uint8)
        if not np.array_equal((soft_project(llrs, off.v) < 0).astype(np.uint8), hard_project(hard, off.v)):
            return False, "soft and hard projection disagree"
    return True, f"{cases} random frames"


def run(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    checks = [
        ("free distances", _distances),
        ("encoder equivalence", _encoder_equivalence),
        ("viterbi = brute-force ML", lambda: _viterbi_vs_brute_force(rng)),
        ("projection identities", lambda: _projection_identities(rng)),
    ]
    return [(name, *fn()) for name, fn in checks]

