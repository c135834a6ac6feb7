"""Speed, covariance and the Monte Carlo reports on sampled paths."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from prudent_walk import _kernels
from prudent_walk.effective_walk import TiltParams, default_tilt, tilted_series
from prudent_walk.enumeration_oracle import iter_prudent
from prudent_walk.errors import DomainError
from prudent_walk.lattice_core import LatticePath, quadrant_statistic
from prudent_walk.samplers import ISSampler, make_stream, sample_kinetic, string_to_codes

MOMENT_T_MAX = 3000

DELTA_DEFAULT = 3.0
KAPPA_DEFAULT = 5.0
ALPHA_DEFAULT = 10.0


# -- excursion moments ----------------------------------------------------------

@dataclass(frozen=True)
class ExcursionMoments:
    ET: float
    EN: float
    ET2: float
    EN2: float
    ENT: float
    tail_bound: float  # bound on the neglected part of the largest series (E[T^2])

    @property
    def var_T(self) -> float:
        return self.ET2 - self.ET ** 2

    @property
    def var_N(self) -> float:
        return self.EN2 - self.EN ** 2

    @property
    def cov_NT(self) -> float:
        return self.ENT - self.EN * self.ET


def _weighted_tail(last: float, t_max: int, r: float, power: int) -> float:
    """Bound for sum_{t > t_max} t^power w(t) given w(t+1) <= r w(t)."""
    j = np.arange(1, 20_000)
    return float(last * np.sum((t_max + j) ** power * r ** j))


@lru_cache(maxsize=4)
def excursion_moments(t_max: int = MOMENT_T_MAX, tilt: TiltParams | None = None) -> ExcursionMoments:
    tilt = tilt or default_tilt()
    s = tilted_series(tilt.lambda_star, t_max)
    t = np.arange(t_max + 1, dtype=float)
    mass = math.fsum(s.w0)
    ET = math.fsum(t * s.w0) / mass
    EN = math.fsum(s.w1) / mass
    ET2 = math.fsum(t * t * s.w0) / mass
    EN2 = math.fsum(s.w2) / mass
    ENT = math.fsum(t * s.w1) / mass
    r = math.exp(tilt.lambda_hat - tilt.lambda_star)
    tail = _weighted_tail(s.w0[t_max], t_max, r, 2)
    return ExcursionMoments(ET, EN, ET2, EN2, ENT, tail)


def speed_c(m: ExcursionMoments | None = None) -> float:
    m = m or excursion_moments()
    return m.EN / (2.0 * m.ET)


def covariance_B(m: ExcursionMoments | None = None) -> np.ndarray:
    """Diffusion matrix of the endpoint around c L (1, 1).

    Index 1 is the x coordinate (odd, horizontal excursions), index 2 the
    y coordinate; excursion pairs are i.i.d. with independent members.
    """
    m = m or excursion_moments()
    mT, mN = m.ET, m.EN
    vT, vN, cNT = m.var_T, m.var_N, m.cov_NT
    d = 8.0 * mT ** 3
    s11 = (4 * mT ** 2 * vN + 2 * mN ** 2 * vT - 4 * mT * mN * cNT) / d
    s12 = (2 * mN ** 2 * vT - 4 * mT * mN * cNT) / d
    return np.array([[s11, s12], [s12, s11]])


# -- deterministic fan-out ------------------------------------------------------

def _worker_counts(n: int, workers: int) -> list[int]:
    if workers < 1:
        raise DomainError("workers must be >= 1")
    return [n // workers + (1 if w < n % workers else 0) for w in range(workers)]


def fan_out(task: Callable, n: int, seed: int, workers: int = 1, **kw) -> np.ndarray:
    """Run task(seed, worker, count, **kw) -> array per worker and stack
    the results in worker order.  Draw j of worker w uses stream
    (seed, w, j), so the output depends only on (seed, workers)."""
    counts = _worker_counts(n, workers)
    if workers == 1:
        parts = [task(seed, 0, counts[0], **kw)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(task, seed, w, c, **kw) for w, c in enumerate(counts)]
            parts = [f.result() for f in futs]
    return np.concatenate(parts, axis=0)


# per-draw statistics: columns documented next to each task

TS_COLS = ("x_mid", "y_mid", "x_end", "y_end", "diag_sup")


def _two_sided_task(seed: int, worker: int, count: int, L: int, c: float,
                    mid: float = 0.5) -> np.ndarray:
    tilt = default_tilt()
    steps = np.empty(L, dtype=np.int64)
    TN = np.empty((L + 1, 2), dtype=np.int64)
    out = np.empty((count, len(TS_COLS)))
    k_mid = int(round(mid * L))
    for j in range(count):
        rng = make_stream(seed, worker, j)
        k, _ = _kernels.two_sided_pinned(rng, L, tilt.q, tilt.rho, 10 ** 7, steps, TN)
        if k < 0:
            raise RuntimeError("pinning stalled")
        xm, ym = _kernels.position_at(steps, k_mid)
        xe, ye = _kernels.position_at(steps, L)
        out[j] = (xm, ym, xe, ye, _kernels.diagonal_sup(steps, c))
    return out


IS_COLS = ("log_w", "x_end", "y_end", "diag_sup", "gamma", "tail", "eps1",
           "late_crossing", "head_length")


def _is_task(seed: int, worker: int, count: int, L: int, c: float,
             delta: float = DELTA_DEFAULT) -> np.ndarray:
    sm = ISSampler(L)
    out = np.empty((count, len(IS_COLS)))
    i0 = math.ceil(delta * math.log(L))  # first index of the late window
    head = math.floor(delta * math.log(L))
    for j in range(count):
        k, tail, logw = sm.draw_raw(make_stream(seed, worker, j))
        x, y = _kernels.position_at(sm.steps, L)
        rec = sm.rec[:k]
        late = bool(np.any(rec[max(i0, 1) - 1:, 2] == 1))
        out[j] = (logw, x, y, _kernels.diagonal_sup(sm.steps, c), k, tail,
                  rec[0, 2] if k else 1, late, rec[:head, 0].sum())
    return out


KIN_COLS = ("x_end", "y_end", "diag_sup")


def _kinetic_task(seed: int, worker: int, count: int, L: int, c: float) -> np.ndarray:
    out = np.empty((count, len(KIN_COLS)))
    for j in range(count):
        p = sample_kinetic(L, make_stream(seed, worker, j))
        codes = string_to_codes(p.steps)
        x, y = p.endpoint
        out[j] = (x, y, _kernels.diagonal_sup(codes, c))
    return out


LAWS = ("two-sided", "uniform-is", "kinetic")


@lru_cache(maxsize=8)
def _draws(law: str, L: int, n: int, seed: int, workers: int) -> np.ndarray:
    if L < 1 or n < 1:
        raise DomainError("need L >= 1 and n >= 1")
    c = speed_c()
    if law == "two-sided":
        return fan_out(_two_sided_task, n, seed, workers, L=L, c=c)
    if law == "uniform-is":
        return fan_out(_is_task, n, seed, workers, L=L, c=c)
    if law == "kinetic":
        return fan_out(_kinetic_task, n, seed, workers, L=L, c=c)
    raise DomainError(f"unknown law {law!r}; expected one of {LAWS}")


def draws(law: str, L: int, n: int, seed: int = 0, workers: int = 1) -> dict[str, np.ndarray]:
    """Per-draw statistics as named columns (cached per argument tuple)."""
    arr = _draws(law, L, n, seed, workers)
    cols = {"two-sided": TS_COLS, "uniform-is": IS_COLS, "kinetic": KIN_COLS}[law]
    return {name: arr[:, i] for i, name in enumerate(cols)}


# -- weighted estimates ---------------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    ess: float


def normalized_weights(log_w: np.ndarray | None, n: int) -> np.ndarray:
    if log_w is None:
        return np.full(n, 1.0 / n)
    w = np.exp(log_w - log_w.max())
    return w / w.sum()


def effective_sample_size(p: np.ndarray) -> float:
    return float(1.0 / np.sum(p * p))


def weighted_mean(f: np.ndarray, log_w: np.ndarray | None = None) -> Estimate:
    """Self-normalised mean with a delta-method standard error."""
    f = np.asarray(f, dtype=float)
    p = normalized_weights(log_w, len(f))
    m = float(np.clip(np.sum(p * f), f.min(), f.max()))  # convex combination
    if log_w is None:
        se = float(np.std(f, ddof=1) / math.sqrt(len(f))) if len(f) > 1 else 0.0
    else:
        se = float(math.sqrt(np.sum(p * p * (f - m) ** 2)))
    return Estimate(m, se, effective_sample_size(p))


def _log_weights(d: dict) -> np.ndarray | None:
    return d.get("log_w")


# -- reports --------------------------------------------------------------------

@dataclass(frozen=True)
class ConcentrationResult:
    law: str
    L: int
    eps: float
    freq: float
    stderr: float
    ess: float


def concentration_report(law: str, L: int, eps: float, n_draws: int, seed: int = 0,
                         workers: int = 1) -> ConcentrationResult:
    """Fraction of paths within eps of some diagonal c t e_i, sup over vertices."""
    d = draws(law, L, n_draws, seed, workers)
    est = weighted_mean(d["diag_sup"] <= eps, _log_weights(d))
    return ConcentrationResult(law, L, eps, est.value, est.stderr, est.ess)


@dataclass(frozen=True)
class CLTResult:
    L: int
    grid: tuple[float, ...]
    cov: dict  # (s, t) -> 2x2 matrix
    mean: dict  # t -> 2-vector
    n: int


def clt_report(L: int, n_draws: int, seed: int = 0, workers: int = 1,
               grid: Sequence[float] = (0.5, 1.0)) -> CLTResult:
    """Empirical covariances of sqrt(L)(pi_{tL}/L - c t (1,1)) under the
    two-sided law.  Only the grid {0, 1/2, 1} is tracked per draw."""
    if any(t not in (0.0, 0.5, 1.0) for t in grid):
        raise DomainError("grid points must be among 0, 0.5, 1")
    d = draws("two-sided", L, n_draws, seed, workers)
    c = speed_c()
    Y = {0.0: np.zeros((n_draws, 2)),
         0.5: np.column_stack([d["x_mid"], d["y_mid"]]),
         1.0: np.column_stack([d["x_end"], d["y_end"]])}
    Z = {t: math.sqrt(L) * (Y[t] / L - c * t) for t in Y}
    cov, mean = {}, {}
    for s in grid:
        mean[s] = Z[s].mean(axis=0)
        for t in grid:
            a = Z[s] - Z[s].mean(axis=0)
            b = Z[t] - Z[t].mean(axis=0)
            cov[(s, t)] = a.T @ b / (n_draws - 1)
    return CLTResult(L, tuple(grid), cov, mean, n_draws)


def _quadrant_codes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    q = np.zeros(len(x), dtype=np.int64)
    q[(x > 0) & (y > 0)] = 1
    q[(x < 0) & (y > 0)] = 2
    q[(x < 0) & (y < 0)] = 3
    q[(x > 0) & (y < 0)] = 4
    return q


@dataclass(frozen=True)
class QuadrantResult:
    law: str
    L: int
    freq: tuple[float, ...]  # classes 0..4, law on all of Omega_L
    stderr: tuple[float, ...]
    reduced_freq: tuple[float, ...]  # classes 0..4 before symmetrisation
    ess: float


def symmetrized_quadrants(x: np.ndarray, y: np.ndarray, L: int,
                          p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Quadrant law on Omega_L from weighted reduced paths.

    Each reduced path stands for its 8 images under the lattice symmetries;
    the straight path has only 4 and counts half.  An endpoint off the
    axes sends 2 of its 8 images to every open quadrant.  Returns the
    frequencies and the per-draw indicator matrix used for errors.
    """
    straight = (np.abs(x) == L) & (y == 0)
    mult = np.where(straight, 0.5, 1.0)
    p = p * mult
    p = p / p.sum()
    on_axis = ((x == 0) | (y == 0)).astype(float)
    ind = np.empty((len(x), 5))
    ind[:, 0] = on_axis
    ind[:, 1:] = ((1.0 - on_axis) / 4.0)[:, None]
    return ind.T @ p, ind


def quadrant_distribution(law: str, L: int, n_draws: int, seed: int = 0,
                          workers: int = 1) -> QuadrantResult:
    d = draws(law, L, n_draws, seed, workers)
    x, y = d["x_end"], d["y_end"]
    p = normalized_weights(_log_weights(d), len(x))
    raw = np.bincount(_quadrant_codes(x, y), weights=p, minlength=5)
    if law == "uniform-is":
        freq, ind = symmetrized_quadrants(x, y, L, p)
        se = np.sqrt(((ind - freq) ** 2 * (p ** 2)[:, None]).sum(axis=0))
    else:
        freq = np.clip(raw, 0.0, 1.0)
        se = np.sqrt(freq * (1 - freq) / len(x))
    return QuadrantResult(law, L, tuple(map(float, freq)), tuple(map(float, se)),
                          tuple(map(float, raw)), effective_sample_size(p))


def exact_quadrant_distribution(L: int) -> tuple[float, ...]:
    counts = np.zeros(5)
    for s in iter_prudent(L, L_max=max(L, 14)):
        counts[quadrant_statistic(LatticePath(s))] += 1
    return tuple(map(float, counts / counts.sum()))


@dataclass(frozen=True)
class CrossingResult:
    L: int
    delta: float
    kappa: float
    alpha: float
    late_crossing: Estimate
    long_head: Estimate
    long_tail: Estimate
    eps1_freq: float


def crossing_report(L: int, n_draws: int, seed: int = 0, workers: int = 1,
                    delta: float = DELTA_DEFAULT, kappa: float = KAPPA_DEFAULT,
                    alpha: float = ALPHA_DEFAULT) -> CrossingResult:
    """Weighted frequencies, under the uniform law, of a crossing at index
    >= delta log L, of the first delta log L excursions using at least
    kappa (log L)^2 steps, and of a tail of length >= alpha log L."""
    if delta != DELTA_DEFAULT:
        d = {name: col for name, col in zip(
            IS_COLS, fan_out(_is_task, n_draws, seed, workers, L=L, c=speed_c(), delta=delta).T)}
    else:
        d = draws("uniform-is", L, n_draws, seed, workers)
    lw = d["log_w"]
    logL = math.log(L)
    return CrossingResult(
        L, delta, kappa, alpha,
        weighted_mean(d["late_crossing"], lw),
        weighted_mean(d["head_length"] >= kappa * logL ** 2, lw),
        weighted_mean(d["tail"] >= alpha * logL, lw),
        float(np.mean(d["eps1"])))


def max_excursion_medians(Ls: Sequence[int], n_draws: int, seed: int = 0) -> list[float]:
    """Median over draws of max_{i <= L} T_i / sqrt(L) for i.i.d. tilted excursions."""
    tilt = default_tilt()
    out = []
    for L in Ls:
        vals = np.empty(n_draws)
        for j in range(n_draws):
            rows = _kernels.pstar_many(make_stream(seed, L, j), tilt.q, tilt.rho, -1, L, 1 << 20)
            vals[j] = rows[:, 1].max() / math.sqrt(L)
        out.append(float(np.median(vals)))
    return out


# -- aggregate report -----------------------------------------------------------

@dataclass
class ScalingReport:
    lambda_star: float
    c: float
    sigma: list
    concentration: dict
    quadrants: list
    crossings: dict
    ess: float
    extra: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = asdict(self)
        extra = out.pop("extra")
        out.update(extra)
        return out


def build_report(L: int = 1000, n_draws: int = 2000, eps: float = 0.1, seed: int = 0,
                 workers: int = 1, law: str = "uniform-is") -> ScalingReport:
    tilt = default_tilt()
    conc = concentration_report(law, L, eps, n_draws, seed, workers)
    quad = quadrant_distribution(law, L, n_draws, seed, workers)
    cr = crossing_report(L, n_draws, seed, workers) if law == "uniform-is" else None
    crossings = {} if cr is None else {
        "L": cr.L, "delta": cr.delta, "kappa": cr.kappa, "alpha": cr.alpha,
        "late_crossing": cr.late_crossing.value, "long_head": cr.long_head.value,
        "long_tail": cr.long_tail.value, "eps1_freq": cr.eps1_freq}
    return ScalingReport(
        lambda_star=tilt.lambda_star,
        c=speed_c(),
        sigma=covariance_B().tolist(),
        concentration={"L": L, "eps": eps, "freq": conc.freq},
        quadrants=list(quad.freq),
        crossings=crossings,
        ess=conc.ess,
        extra={"law": law, "n_draws": n_draws, "seed": seed, "workers": workers},
    )
