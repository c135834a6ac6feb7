"""Lattice paths, prudence checks and the two excursion decompositions."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from prudent_walk.errors import DomainError, PreconditionError


class Step(enum.Enum):
    E = (1, 0)
    N = (0, 1)
    W = (-1, 0)
    S = (0, -1)

    @property
    def dx(self) -> int:
        return self.value[0]

    @property
    def dy(self) -> int:
        return self.value[1]


STEP_CODES = "ENWS"
DELTAS = {"E": (1, 0), "N": (0, 1), "W": (-1, 0), "S": (0, -1)}
HORIZONTAL = frozenset("EW")


@dataclass(frozen=True)
class LatticePath:
    """Nearest-neighbour path from the origin, stored as a step string."""

    steps: str

    def __post_init__(self):
        if isinstance(self.steps, (list, tuple)):
            object.__setattr__(self, "steps", "".join(
                s.name if isinstance(s, Step) else str(s) for s in self.steps))
        bad = set(self.steps) - set(STEP_CODES)
        if bad:
            raise DomainError(f"unknown step symbols {sorted(bad)}")

    @property
    def L(self) -> int:
        return len(self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    @cached_property
    def vertices(self) -> np.ndarray:
        v = np.zeros((self.L + 1, 2), dtype=np.int64)
        if self.L:
            d = np.array([DELTAS[s] for s in self.steps], dtype=np.int64)
            v[1:] = np.cumsum(d, axis=0)
        return v

    @property
    def endpoint(self) -> tuple[int, int]:
        x, y = self.vertices[-1]
        return int(x), int(y)

    def bounding_box(self, t: int | None = None) -> tuple[int, int, int, int]:
        v = self.vertices if t is None else self.vertices[: t + 1]
        return (int(v[:, 0].min()), int(v[:, 0].max()),
                int(v[:, 1].min()), int(v[:, 1].max()))

    @classmethod
    def from_vertices(cls, vertices: Sequence[Sequence[int]]) -> "LatticePath":
        lookup = {d: s for s, d in DELTAS.items()}
        out = []
        for a, b in zip(vertices[:-1], vertices[1:]):
            d = (int(b[0]) - int(a[0]), int(b[1]) - int(a[1]))
            if d not in lookup:
                raise DomainError(f"vertices {tuple(a)} -> {tuple(b)} are not adjacent")
            out.append(lookup[d])
        if len(vertices) and tuple(map(int, vertices[0])) != (0, 0):
            raise DomainError("paths start at the origin")
        return cls("".join(out))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "x", "y"])
        for i, (x, y) in enumerate(self.vertices):
            w.writerow([i, int(x), int(y)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "LatticePath":
        rows = list(csv.DictReader(io.StringIO(text)))
        rows.sort(key=lambda r: int(r["i"]))
        return cls.from_vertices([(int(r["x"]), int(r["y"])) for r in rows])

    def rotate(self, k: int = 1) -> "LatticePath":
        """Rotate by k quarter turns counter-clockwise."""
        table = {"E": "N", "N": "W", "W": "S", "S": "E"}
        s = self.steps
        for _ in range(k % 4):
            s = "".join(table[c] for c in s)
        return LatticePath(s)

    def reflect_diagonal(self) -> "LatticePath":
        table = {"E": "N", "N": "E", "W": "S", "S": "W"}
        return LatticePath("".join(table[c] for c in self.steps))


class RangeIndex:
    """Per-row and per-column extremes of the visited set.

    A ray can only hit the range inside its own row or column, so the
    extremes answer a ray query in O(1).
    """

    __slots__ = ("row_min", "row_max", "col_min", "col_max")

    def __init__(self):
        self.row_min: dict[int, int] = {}
        self.row_max: dict[int, int] = {}
        self.col_min: dict[int, int] = {}
        self.col_max: dict[int, int] = {}

    def add(self, x: int, y: int) -> None:
        if y in self.row_min:
            self.row_min[y] = min(self.row_min[y], x)
            self.row_max[y] = max(self.row_max[y], x)
        else:
            self.row_min[y] = self.row_max[y] = x
        if x in self.col_min:
            self.col_min[x] = min(self.col_min[x], y)
            self.col_max[x] = max(self.col_max[x], y)
        else:
            self.col_min[x] = self.col_max[x] = y

    def ray_hits(self, x: int, y: int, step: str) -> bool:
        # (x, y) is itself visited, so its row and column are present.
        if step == "E":
            return self.row_max[y] > x
        if step == "W":
            return self.row_min[y] < x
        if step == "N":
            return self.col_max[x] > y
        return self.col_min[x] < y


def is_prudent(path: LatticePath) -> bool:
    idx = RangeIndex()
    x = y = 0
    idx.add(0, 0)
    for s in path.steps:
        if idx.ray_hits(x, y, s):
            return False
        dx, dy = DELTAS[s]
        x += dx
        y += dy
        idx.add(x, y)
    return True


def admissible_steps(path: LatticePath) -> list[str]:
    """Steps that keep the path prudent, in E<N<W<S order."""
    idx = RangeIndex()
    for x, y in path.vertices:
        idx.add(int(x), int(y))
    x, y = path.endpoint
    return [s for s in STEP_CODES if not idx.ray_hits(x, y, s)]


def ray_hits_negative_quadrant(x: int, y: int, step: str) -> bool:
    """Whether {(x, y) + k d : k >= 1} meets (-inf, 0]^2."""
    if step == "W":
        return y <= 0
    if step == "S":
        return x <= 0
    if step == "E":
        return x < 0 and y <= 0
    return x <= 0 and y < 0


def is_two_sided_plus(path: LatticePath) -> bool:
    if path.L == 0 or path.steps[0] != "E" or not is_prudent(path):
        return False
    x = y = 0
    for s in path.steps:
        if ray_hits_negative_quadrant(x, y, s):
            return False
        dx, dy = DELTAS[s]
        x += dx
        y += dy
    _, xmax, _, ymax = path.bounding_box()
    return (x, y) == (xmax, ymax)


@dataclass(frozen=True)
class RescaledPath:
    grid: np.ndarray
    values: np.ndarray


def rescale_path(path: LatticePath, grid: Iterable[float]) -> RescaledPath:
    if path.L < 1:
        raise DomainError("rescaling needs L >= 1")
    g = np.asarray(list(grid), dtype=float)
    if np.any((g < 0) | (g > 1)):
        raise DomainError("grid values must lie in [0, 1]")
    L = path.L
    v = path.vertices.astype(float)
    s = g * L
    k = np.minimum(np.floor(s).astype(np.int64), L - 1)
    frac = (s - k)[:, None]
    vals = (v[k] + frac * (v[k + 1] - v[k])) / L
    return RescaledPath(g, vals)


def quadrant_statistic(path: LatticePath) -> int:
    x, y = path.endpoint
    if x == 0 or y == 0:
        return 0
    if x > 0:
        return 1 if y > 0 else 4
    return 2 if y > 0 else 3


def range_dims_series(path: LatticePath) -> tuple[np.ndarray, np.ndarray]:
    """Arrays (W_t, H_t) for t = 0..L, counting visited columns and rows."""
    v = path.vertices
    xs = v[:, 0]
    ys = v[:, 1]
    W = np.maximum.accumulate(xs) - np.minimum.accumulate(xs) + 1
    H = np.maximum.accumulate(ys) - np.minimum.accumulate(ys) + 1
    return W, H


def range_dims(path: LatticePath, t: int) -> tuple[int, int]:
    if not 0 <= t <= path.L:
        raise DomainError(f"time {t} outside [0, {path.L}]")
    W, H = range_dims_series(path)
    return int(W[t]), int(H[t])


# -- two-sided decomposition ---------------------------------------------------

@dataclass(frozen=True)
class TwoSidedExcursion:
    kind: str  # "H" or "V"
    start: int
    end: int
    steps: str
    values: tuple[int, ...]

    @property
    def T(self) -> int:
        return self.end - self.start

    @property
    def N(self) -> int:
        return len(self.values) - 1


def excursion_values(steps: str, kind: str, inward: int) -> tuple[int, ...]:
    """Effective-walk image of one excursion.

    ``inward`` is the lattice direction (+1 or -1) along the transverse
    axis that counts as positive displacement.
    """
    along = HORIZONTAL if kind == "H" else frozenset("NS")
    vals = [0]
    cur = 0
    first = True
    for s in steps:
        if s in along:
            if not first:
                vals.append(cur)
            first = False
        else:
            dx, dy = DELTAS[s]
            cur += (dy if kind == "H" else dx) * inward
    vals.append(cur)
    return tuple(vals)


def decompose_two_sided(path: LatticePath) -> list[TwoSidedExcursion]:
    if not is_two_sided_plus(path):
        raise PreconditionError("path is not a two-sided prudent path")
    v = path.vertices
    L = path.L
    bounds = [0]
    k = 1
    while True:
        prev = bounds[-1]
        coord = 1 if k % 2 else 0
        ref = v[prev, coord]
        later = np.nonzero(v[prev + 1:, coord] > ref)[0]
        if later.size == 0:
            bounds.append(L)
            break
        bounds.append(prev + int(later[0]))
        k += 1
    out = []
    for k in range(1, len(bounds)):
        a, b = bounds[k - 1], bounds[k]
        kind = "H" if k % 2 else "V"
        seg = path.steps[a:b]
        # horizontal excursions sit below their starting row, vertical
        # ones to the left of their starting column
        out.append(TwoSidedExcursion(kind, a, b, seg, excursion_values(seg, kind, -1)))
    return out


# -- general decomposition -----------------------------------------------------

@dataclass(frozen=True)
class ExcursionRecord:
    T: int
    N: int
    eps: int
    orientation: str  # corner reached, e.g. "NE"
    kind: str = "H"
    values: tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not 1 <= self.N <= self.T:
            raise DomainError(f"need 1 <= N <= T, got N={self.N}, T={self.T}")
        if self.eps not in (0, 1):
            raise DomainError("eps must be 0 or 1")


@dataclass(frozen=True)
class GeneralDecomposition:
    records: tuple[ExcursionRecord, ...]
    boundaries: tuple[int, ...]
    R_sequence: tuple[int, ...]
    gamma_L: int
    tail_length: int
    tail: ExcursionRecord | None = None

    def slab(self, i: int) -> int:
        """R_{i-1} for 1-based excursion index i."""
        return 0 if i <= 1 else self.R_sequence[i - 2]


def _corner(x, y, box) -> str:
    xmin, xmax, ymin, ymax = box
    ns = "N" if y == ymax else "S"
    ew = "E" if x == xmax else "W"
    return ns + ew


def is_reduced(path: LatticePath) -> bool:
    """First step E and first vertical step (if any) N."""
    if path.L == 0:
        return True
    if path.steps[0] != "E":
        return False
    for s in path.steps:
        if s in "NS":
            return s == "N"
    return True


def decompose_general(path: LatticePath) -> GeneralDecomposition:
    if not is_prudent(path) or not is_reduced(path):
        raise PreconditionError("decompose_general needs a reduced prudent path")
    L = path.L
    v = path.vertices
    W, H = range_dims_series(path)
    grow = {"H": np.nonzero(H[1:] > H[:-1])[0] + 1,  # times t with H_t > H_{t-1}
            "V": np.nonzero(W[1:] > W[:-1])[0] + 1}
    records: list[ExcursionRecord] = []
    bounds = [0]
    Rs: list[int] = []
    tail = None
    start = 0
    i = 1
    while start < L:
        kind = "H" if i % 2 else "V"
        later = grow[kind][grow[kind] > start]
        end = int(later[0]) - 1 if later.size else L
        box_start = path.bounding_box(start)
        xs, ys = int(v[start, 0]), int(v[start, 1])
        if kind == "H":
            R = box_start[3] - box_start[2]
            inward = -1 if ys == box_start[3] and R > 0 else 1
        else:
            R = box_start[1] - box_start[0]
            inward = -1 if xs == box_start[1] else 1
        seg = path.steps[start:end]
        vals = excursion_values(seg, kind, inward)
        N = len(vals) - 1
        complete = later.size > 0 or vals[-1] in (0, R)
        eps = 1 if vals[-1] == R else 0
        if kind == "H":
            crossing = abs(int(v[end, 1]) - ys) == H[end] - 1
        else:
            crossing = abs(int(v[end, 0]) - xs) == W[end] - 1
        assert crossing == bool(eps) or not complete
        rec = ExcursionRecord(end - start, N, eps,
                              _corner(int(v[end, 0]), int(v[end, 1]), path.bounding_box(end)),
                              kind, vals)
        if not complete:
            tail = rec
            break
        records.append(rec)
        prev2 = Rs[-2] if len(Rs) >= 2 else 0
        Rs.append(prev2 + N)
        bounds.append(end)
        start = end
        i += 1
    T_sum = sum(r.T for r in records)
    return GeneralDecomposition(tuple(records), tuple(bounds), tuple(Rs),
                                len(records), L - T_sum, tail)


def assemble_general(excursions: Sequence[Sequence[int]]) -> LatticePath:
    """Rebuild a reduced prudent path from effective excursion values.

    Excursion ``i`` (1-based) is horizontal for odd ``i``; the final entry
    may be an incomplete tail.  Each excursion starts at a corner of the
    current bounding box and moves outward.
    """
    x = y = 0
    xmin = xmax = ymin = ymax = 0
    out: list[str] = []
    for i, vals in enumerate(excursions, start=1):
        if len(vals) < 2 or vals[0] != 0:
            raise DomainError("excursion values start at 0 and have N >= 1")
        if i % 2:
            along = "E" if x == xmax else "W"
            up, down = ("S", "N") if (y == ymax and ymax > ymin) else ("N", "S")
        else:
            along = "N" if y == ymax else "S"
            up, down = ("W", "E") if x == xmax else ("E", "W")
        seg = []
        for a, b in zip(vals[:-1], vals[1:]):
            seg.append(along)
            seg.extend((up if b > a else down) * abs(b - a))
        out.extend(seg)
        for s in seg:
            dx, dy = DELTAS[s]
            x += dx
            y += dy
            xmin, xmax = min(xmin, x), max(xmax, x)
            ymin, ymax = min(ymin, y), max(ymax, y)
    return LatticePath("".join(out))
