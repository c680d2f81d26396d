"""Pruned subcodes of a unit-memory code and their free distances."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import gf2
from .cc import ConvCodeSpec, UmCode, encode_um, to_unit_memory
from .trellis import um_branch_outputs

MAX_SEARCH_MEMORY = 5
STEP_CAP_PER_MEMORY = 20

UNBOUNDED = math.inf


@dataclass(frozen=True, eq=False)
class PrunedSubcode:
    parent: UmCode
    level: int
    g0_pruned: np.ndarray
    g1_pruned: np.ndarray

    @property
    def q(self) -> int:
        return self.parent.q

    @property
    def rate(self) -> float:
        return (self.parent.q - self.level) / self.parent.n

    @cached_property
    def free_distance(self) -> int:
        return free_distance(self)

    def encode(self, blocks) -> np.ndarray:
        """Encode through the pruned matrices; bits in the pruned rows are ignored."""
        pruned = UmCode(self.g0_pruned, self.g1_pruned, self.parent.scrambler, self.parent.source)
        return encode_um(pruned, blocks)


@dataclass(frozen=True, eq=False)
class DistanceProfile:
    scrambler: np.ndarray
    distances: tuple = field(default=())

    def __str__(self):
        ds = ", ".join(f"d_{j}={d}" for j, d in enumerate(self.distances))
        return f"scrambler={gf2.format_matrix(self.scrambler)} {ds}"


def prune(parent: UmCode, j: int) -> PrunedSubcode:
    if not 0 <= j <= parent.q - 1:
        raise ValueError(f"pruning level must be in [0, {parent.q - 1}], got {j}")
    g0 = parent.g0.copy()
    g1 = parent.g1.copy()
    g0[:j] = 0
    g1[:j] = 0
    return PrunedSubcode(parent, j, g0, g1)


def _as_um(code) -> tuple[UmCode, int]:
    if isinstance(code, PrunedSubcode):
        return code.parent, code.level
    if isinstance(code, UmCode):
        return code, 0
    if isinstance(code, ConvCodeSpec):
        return to_unit_memory(code), 0
    raise TypeError(f"cannot compute a distance for {type(code).__name__}")


def free_distance(code, level: int | None = None) -> float:
    """Minimum weight of a path that leaves state 0 and first returns to it.

    Uniform-cost search over (state, depth) with depth capped at
    ``20 * q`` blocks.  Returns ``math.inf`` when no remerging path exists.
    """
    um, lvl = _as_um(code)
    if level is not None:
        lvl = level
    q = um.q
    if not 0 <= lvl <= q - 1:
        raise ValueError(f"pruning level must be in [0, {q - 1}]")
    weights = um_branch_outputs(um).sum(axis=-1).astype(int)
    inputs = [b for b in range(1 << q) if b & ((1 << lvl) - 1) == 0]
    cap = STEP_CAP_PER_MEMORY * q

    heap = [(int(weights[0, b]), 1, b) for b in inputs if b != 0]
    heapq.heapify(heap)
    done = set()
    while heap:
        w, depth, s = heapq.heappop(heap)
        if s == 0:
            return w
        if (s, depth) in done or depth >= cap:
            continue
        done.add((s, depth))
        for b in inputs:
            heapq.heappush(heap, (w + int(weights[s, b]), depth + 1, b))
    return UNBOUNDED


def distance_profile(spec: ConvCodeSpec, scrambler=None) -> DistanceProfile:
    um = to_unit_memory(spec, scrambler)
    return DistanceProfile(um.scrambler, tuple(free_distance(um, j) for j in range(spec.memory)))


def search_scrambler(spec: ConvCodeSpec, objective_level: int) -> DistanceProfile:
    """Exhaustive search over invertible scramblers.

    Maximises d at ``objective_level``; ties go to the lexicographically
    larger (d_{q-1}, ..., d_1) and then to the earlier enumerated matrix.
    """
    q = spec.memory
    if q > MAX_SEARCH_MEMORY:
        raise ValueError(f"exhaustive search is limited to memory <= {MAX_SEARCH_MEMORY}")
    if not 0 <= objective_level <= q - 1:
        raise ValueError(f"objective level must be in [0, {q - 1}]")
    profiles = [distance_profile(spec, m) for m in gf2.enumerate_invertible(q)]

    def key(indexed):
        i, p = indexed
        return (p.distances[objective_level], tuple(reversed(p.distances[1:])), -i)

    return max(enumerate(profiles), key=key)[1]


def suboptimal_scrambler(spec: ConvCodeSpec, level: int, target: int) -> np.ndarray:
    """The identity if it gives ``d_level == target``, else the first enumerated matrix that does."""
    ident = gf2.identity(spec.memory)
    if free_distance(to_unit_memory(spec, ident), level) == target:
        return ident
    for m in gf2.enumerate_invertible(spec.memory):
        if free_distance(to_unit_memory(spec, m), level) == target:
            return np.array(m)
    raise ValueError(f"no scrambler gives d_{level} = {target}")
