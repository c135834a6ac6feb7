"""Brute-force enumeration of prudent path families (ground truth)."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

import numpy as np

from prudent_walk.errors import CapacityError, DomainError
from prudent_walk.lattice_core import (
    DELTAS,
    STEP_CODES,
    LatticePath,
    ray_hits_negative_quadrant,
)

L_MAX_DEFAULT = 14


@dataclass(frozen=True)
class CountTable:
    family: str  # "omega", "omega_reduced", "omega_plus" or "I"
    length: int
    count: int
    endpoints: dict = field(default_factory=dict, compare=False)


def _check_L(L: int, L_max: int) -> None:
    if L < 1:
        raise DomainError("L must be >= 1")
    if L > L_max:
        raise CapacityError(
            f"L={L} exceeds L_max={L_max}; enumeration grows like 2.5^L, "
            "raise L_max explicitly or use a sampler")


def _dfs(L: int, first_step: str | None, first_vertical: str | None,
         two_sided: bool) -> Iterator[str]:
    """Prudent DFS in E<N<W<S order using per-row/column extremes."""
    row_min: dict[int, int] = {0: 0}
    row_max: dict[int, int] = {0: 0}
    col_min: dict[int, int] = {0: 0}
    col_max: dict[int, int] = {0: 0}
    steps: list[str] = []

    def blocked(x, y, s):
        if s == "E":
            return row_max[y] > x
        if s == "W":
            return row_min[y] < x
        if s == "N":
            return col_max[x] > y
        return col_min[x] < y

    def rec(x, y, seen_vertical):
        if len(steps) == L:
            yield "".join(steps)
            return
        for s in STEP_CODES:
            if not steps and first_step and s != first_step:
                continue
            if first_vertical and not seen_vertical and s in "NS" and s != first_vertical:
                continue
            if blocked(x, y, s):
                continue
            if two_sided and ray_hits_negative_quadrant(x, y, s):
                continue
            dx, dy = DELTAS[s]
            nx, ny = x + dx, y + dy
            saved = (row_min.get(ny), row_max.get(ny), col_min.get(nx), col_max.get(nx))
            row_min[ny] = nx if saved[0] is None else min(saved[0], nx)
            row_max[ny] = nx if saved[1] is None else max(saved[1], nx)
            col_min[nx] = ny if saved[2] is None else min(saved[2], ny)
            col_max[nx] = ny if saved[3] is None else max(saved[3], ny)
            steps.append(s)
            yield from rec(nx, ny, seen_vertical or s in "NS")
            steps.pop()
            for d, key, old in ((row_min, ny, saved[0]), (row_max, ny, saved[1]),
                                (col_min, nx, saved[2]), (col_max, nx, saved[3])):
                if old is None:
                    del d[key]
                else:
                    d[key] = old

    yield from rec(0, 0, False)


def iter_prudent(L: int, reduced: bool = False, L_max: int = L_MAX_DEFAULT) -> Iterator[str]:
    _check_L(L, L_max)
    if reduced:
        return _dfs(L, "E", "N", False)
    return _dfs(L, None, None, False)


def _endpoint(steps: str) -> tuple[int, int]:
    x = steps.count("E") - steps.count("W")
    y = steps.count("N") - steps.count("S")
    return x, y


def enumerate_prudent(L: int, reduced: bool = False, L_max: int = L_MAX_DEFAULT,
                      with_endpoints: bool = False) -> CountTable:
    n = 0
    hist: Counter = Counter()
    for s in iter_prudent(L, reduced, L_max):
        n += 1
        if with_endpoints:
            hist[_endpoint(s)] += 1
    return CountTable("omega_reduced" if reduced else "omega", L, n, dict(hist))


def iter_two_sided_plus(L: int, L_max: int = L_MAX_DEFAULT) -> Iterator[str]:
    _check_L(L, L_max)
    for s in _dfs(L, "E", None, True):
        v = LatticePath(s).vertices
        if tuple(v[-1]) == (v[:, 0].max(), v[:, 1].max()):
            yield s


def enumerate_two_sided_plus(L: int, L_max: int = L_MAX_DEFAULT,
                             with_endpoints: bool = False) -> CountTable:
    n = 0
    hist: Counter = Counter()
    for s in iter_two_sided_plus(L, L_max):
        n += 1
        if with_endpoints:
            hist[_endpoint(s)] += 1
    return CountTable("omega_plus", L, n, dict(hist))


# -- the excursion set I_t -----------------------------------------------------

def iter_excursion_paths(t: int) -> Iterator[str]:
    """Lattice excursions of length t flipped above the axis.

    Steps in {E, N, S}, first step E, no N/S reversal, y >= 0, ending on y = 0.
    """
    if t < 1:
        raise DomainError("t must be >= 1")
    steps = ["E"]

    def rec(y, last):
        if len(steps) == t:
            if y == 0:
                yield "".join(steps)
            return
        remaining = t - len(steps)
        if y > remaining:
            return
        for s in "ENS":
            if (s == "N" and last == "S") or (s == "S" and last == "N"):
                continue
            ny = y + (1 if s == "N" else -1 if s == "S" else 0)
            if ny < 0:
                continue
            steps.append(s)
            yield from rec(ny, s)
            steps.pop()

    yield from rec(0, "E")


def iter_stretch_tuples(t: int) -> Iterator[tuple[int, ...]]:
    """Stretch tuples (l_1..l_n): nonnegative partial sums, zero total, n + sum|l| = t."""
    if t < 1:
        raise DomainError("t must be >= 1")
    cur: list[int] = []

    def rec(height, used):
        if used == t:
            if height == 0:
                yield tuple(cur)
            return
        budget = t - used - 1  # one unit for the horizontal step
        for l in range(-height, budget + 1):
            if abs(l) > budget:
                continue
            if height + l > t - used - 1 - abs(l):
                continue  # cannot come back down in time
            cur.append(l)
            yield from rec(height + l, used + 1 + abs(l))
            cur.pop()

    yield from rec(0, 0)


def count_excursion_set(t: int) -> int:
    return sum(1 for _ in iter_excursion_paths(t))


def count_stretch_tuples(t: int) -> int:
    return sum(1 for _ in iter_stretch_tuples(t))


# -- exact uniform sampling ----------------------------------------------------

@lru_cache(maxsize=32)
def _family_list(family: str, L: int, L_max: int) -> tuple[str, ...]:
    if family == "omega":
        return tuple(iter_prudent(L, False, L_max))
    if family == "omega_reduced":
        return tuple(iter_prudent(L, True, L_max))
    if family == "omega_plus":
        return tuple(iter_two_sided_plus(L, L_max))
    raise DomainError(f"unknown family {family!r}")


def exact_uniform_sample(family: str, L: int, rng: np.random.Generator,
                         L_max: int = L_MAX_DEFAULT) -> LatticePath:
    _check_L(L, L_max)
    paths = _family_list(family, L, L_max)
    return LatticePath(paths[int(rng.integers(len(paths)))])
