"""Path samplers: kinetic, exact two-sided uniform, and weighted uniform."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from prudent_walk import _kernels
from prudent_walk.effective_walk import (
    EffectiveExcursion,
    TiltParams,
    default_tilt,
    log_overshoot_table,
)
from prudent_walk.enumeration_oracle import exact_uniform_sample
from prudent_walk.errors import CapacityError, DomainError, RejectionStall
from prudent_walk.lattice_core import (
    DELTAS,
    STEP_CODES,
    GeneralDecomposition,
    LatticePath,
    RangeIndex,
    decompose_general,
    range_dims_series,
)

MAX_RESTARTS = 1_000_000
MAX_IS_TRIES = 100_000


# -- random streams -------------------------------------------------------------

def make_stream(seed: int, worker: int = 0, draw: int = 0) -> np.random.Generator:
    """Counter-based stream keyed by (seed, worker, draw)."""
    if min(seed, worker, draw) < 0:
        raise DomainError("stream ids must be nonnegative")
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, draw, worker]))


def steps_to_string(codes: np.ndarray) -> str:
    return bytes(np.frombuffer(b"ENWS", dtype=np.uint8)[codes]).decode()


def string_to_codes(steps: str) -> np.ndarray:
    lut = np.zeros(256, dtype=np.int64)
    for i, c in enumerate(STEP_CODES):
        lut[ord(c)] = i
    return lut[np.frombuffer(steps.encode(), dtype=np.uint8)]


# -- kinetic law ----------------------------------------------------------------

def _growth_count(path: LatticePath) -> int:
    """Number of range-growing steps among the first L-1."""
    W, H = range_dims_series(path)
    return int(W[path.L - 1] + H[path.L - 1] - 2)


def kinetic_probability(path: LatticePath) -> float:
    """Kinetic law of a prudent path: 1/4 for the first step, then 1/3
    after each range-growing step and 1/2 otherwise."""
    L = path.L
    if L < 1:
        raise DomainError("L must be >= 1")
    k = _growth_count(path)
    return 0.25 * (1.0 / 3.0) ** k * 0.5 ** (L - 1 - k)


def kinetic_formula_literal(path: LatticePath) -> float:
    """The closed-form kinetic weight with range height and width taken as
    the visited row and column counts of pi[0, L-1]."""
    L = path.L
    W, H = range_dims_series(path)
    hw = int(W[L - 1] + H[L - 1])
    return 0.25 * 0.5 ** (L - hw) * (1.0 / 3.0) ** hw


def sample_kinetic(L: int, rng: np.random.Generator) -> LatticePath:
    if L < 1:
        raise DomainError("L must be >= 1")
    idx = RangeIndex()
    idx.add(0, 0)
    x = y = 0
    out = []
    for _ in range(L):
        choices = [s for s in STEP_CODES if not idx.ray_hits(x, y, s)]
        s = choices[int(rng.integers(len(choices)))]
        out.append(s)
        dx, dy = DELTAS[s]
        x += dx
        y += dy
        idx.add(x, y)
    return LatticePath("".join(out))


# -- two-sided uniform law ------------------------------------------------------

def sample_two_sided_uniform(L: int, rng: np.random.Generator, tilt: TiltParams | None = None,
                             max_restarts: int = MAX_RESTARTS,
                             with_lengths: bool = False):
    """Uniform path among excursion-complete two-sided paths of length L.

    Returns the path, or (path, TN) with the per-excursion (T, N) rows
    when ``with_lengths`` is set.
    """
    if L < 1:
        raise DomainError("L must be >= 1")
    tilt = tilt or default_tilt()
    steps = np.empty(L, dtype=np.int64)
    TN = np.empty((L + 1, 2), dtype=np.int64)
    k, restarts = _kernels.two_sided_pinned(rng, L, tilt.q, tilt.rho, max_restarts, steps, TN)
    if k < 0:
        raise RejectionStall(f"pinning rejected more than {max_restarts} times at L={L}")
    path = LatticePath(steps_to_string(steps))
    return (path, TN[:k].copy()) if with_lengths else path


def build_lattice_from_excursions(excursions: Sequence[EffectiveExcursion | Sequence[int]],
                                  orientation: str = "plus") -> LatticePath:
    """Alternating horizontal/vertical excursions to a lattice path.

    ``plus`` puts positive effective values below (horizontal) or left of
    (vertical) the starting line, matching decompose_two_sided.
    ``flipped`` mirrors them to the other side.
    """
    if orientation == "plus":
        dirs = (("E", "S", "N"), ("N", "W", "E"))
    elif orientation == "flipped":
        dirs = (("E", "N", "S"), ("N", "E", "W"))
    else:
        raise DomainError(f"unknown orientation {orientation!r}")
    out = []
    for i, exc in enumerate(excursions):
        vals = exc.values if isinstance(exc, EffectiveExcursion) else tuple(exc)
        if len(vals) < 2 or vals[0] != 0 or vals[-1] != 0 or min(vals) < 0:
            raise DomainError(f"excursion {i + 1} is not a nonnegative excursion: {vals}")
        along, up, down = dirs[i % 2]
        for a, b in zip(vals[:-1], vals[1:]):
            out.append(along)
            out.append((up if b > a else down) * abs(b - a))
    return LatticePath("".join(out))


# -- importance sampler for the uniform law ------------------------------------

@dataclass(frozen=True)
class WeightedPath:
    path: LatticePath
    weight: float
    log_weight: float
    records: np.ndarray = field(repr=False)  # rows (T, N, eps, R_{i-1})
    tail_length: int = 0

    @cached_property
    def decomposition(self) -> GeneralDecomposition:
        return decompose_general(self.path)


class ISSampler:
    """Reusable buffers for sample_uniform_is at a fixed length."""

    def __init__(self, L: int, tilt: TiltParams | None = None, max_tries: int = MAX_IS_TRIES):
        if L < 1:
            raise DomainError("L must be >= 1")
        self.L = L
        self.tilt = tilt or default_tilt()
        log_k0, logk = log_overshoot_table()
        if L >= len(logk):
            raise CapacityError(f"overshoot table covers R <= {len(logk) - 1}, need L={L}")
        self.log_k0 = log_k0
        self.logk = logk
        self.max_tries = max_tries
        self.steps = np.empty(L, dtype=np.int64)
        self.rec = np.empty((L + 1, 4), dtype=np.int64)

    def draw_raw(self, rng: np.random.Generator) -> tuple[int, int, float]:
        """Fill self.steps / self.rec; return (gamma, tail, log_weight)."""
        k, tail, logw, tries = _kernels.uniform_is_path(
            rng, self.L, self.tilt.q, self.tilt.rho, self.logk, self.log_k0,
            self.steps, self.rec, self.max_tries)
        if k < 0:
            raise RejectionStall(f"no interior tail after {tries} draws at L={self.L}")
        return k, tail, logw

    def draw(self, rng: np.random.Generator) -> WeightedPath:
        k, tail, logw = self.draw_raw(rng)
        return WeightedPath(LatticePath(steps_to_string(self.steps)), math.exp(logw), logw,
                            self.rec[:k].copy(), tail)


def sample_uniform_is(L: int, rng: np.random.Generator, tilt: TiltParams | None = None) -> WeightedPath:
    """Reduced prudent path (first step E, first vertical step N) with an
    importance weight for the uniform law on reduced paths of length L."""
    return ISSampler(L, tilt).draw(rng)


def sample_uniform_exact(L: int, rng: np.random.Generator) -> LatticePath:
    return exact_uniform_sample("omega", L, rng)
