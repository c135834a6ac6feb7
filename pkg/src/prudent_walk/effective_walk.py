"""The one-dimensional effective walk, its excursion kernel and tilted laws.

Weights are organised per lattice step: an effective excursion with N
increments and lattice length T = N + sum|U_i| has untilted weight
(3/2)^N 3^-N 2^-sum|U| = 2^-T, so tilting by lambda multiplies every
lattice step by q = e^-lambda / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.signal import lfilter

from prudent_walk import _kernels
from prudent_walk.errors import CapacityError, DivergenceError, DomainError, SolverError

LOG32 = math.log(1.5)

# Pinned after the first solve; table caches are keyed on it.
LAMBDA_STAR_REF = 0.2155928379279415

T_STAR_MAX = 4000
STRIP_BUDGET = 20_000_000


# -- Laplace increments ---------------------------------------------------------

def laplace_pmf(x: int) -> float:
    return (1.0 / 3.0) * 2.0 ** (-abs(int(x)))


def laplace_mgf_abs(lam: float) -> float:
    """E[exp(-lam |U|)] for the discrete Laplace law."""
    if lam <= 0:
        raise DomainError("lambda must be positive")
    q = math.exp(-lam) / 2.0
    return (1.0 / 3.0) * (1.0 + q) / (1.0 - q)


# -- exact kernel ---------------------------------------------------------------

@lru_cache(maxsize=4)
def excursion_count_table(t_max: int) -> tuple[int, ...]:
    """|I_t| for t = 0..t_max by DP over (steps, height, consumed length).

    Entry 0 is 0.  Exact integers.
    """
    # C[h][len] after n effective steps; heights above t_max/2 cannot return
    hmax = t_max // 2 + 1
    cur = {(0, 0): 1}
    totals = [0] * (t_max + 1)
    while cur:
        nxt: dict[tuple[int, int], int] = {}
        for (h, used), c in cur.items():
            for u in range(-h, t_max):
                nu = used + 1 + abs(u)
                nh = h + u
                if nu > t_max:
                    if u > 0:
                        break
                    continue
                if nh > hmax or nh > t_max - nu:
                    continue
                key = (nh, nu)
                nxt[key] = nxt.get(key, 0) + c
        for (h, used), c in nxt.items():
            if h == 0:
                totals[used] += c
        cur = nxt
    return tuple(totals)


def K_exact(t: int) -> float:
    """K(t) = 2^-t |I_t|."""
    if t < 1:
        raise DomainError("t must be >= 1")
    if t <= 60:
        return math.ldexp(excursion_count_table(max(60, t))[t], -t)
    return float(tilted_series(0.0, t).w0[t])


@dataclass(frozen=True)
class TiltedSeries:
    """Per-length sums over nonnegative effective excursions.

    w0[t] = sum q^t, w1[t] = sum N q^t, w2[t] = sum N^2 q^t with
    q = e^-lam / 2, for t = 0..t_max.
    """

    lam: float
    w0: np.ndarray
    w1: np.ndarray
    w2: np.ndarray


@lru_cache(maxsize=16)
def tilted_series(lam: float, t_max: int) -> TiltedSeries:
    # lattice DP: modes H (after horizontal), U (after up), D (after down)
    beta = math.exp(-lam) / 2.0
    hmax = t_max // 2 + 2
    H = np.zeros((3, hmax))
    U = np.zeros((3, hmax))
    D = np.zeros((3, hmax))
    H[:, 0] = beta
    w = np.zeros((3, t_max + 1))
    if t_max >= 1:
        w[:, 1] = H[:, 0]
    for s in range(2, t_max + 1):
        tot = H + U + D
        nH = np.empty_like(H)
        nH[0] = tot[0]
        nH[1] = tot[1] + tot[0]
        nH[2] = tot[2] + 2.0 * tot[1] + tot[0]
        nH *= beta
        nU = np.zeros_like(U)
        nU[:, 1:] = (H + U)[:, :-1] * beta
        nD = np.zeros_like(D)
        nD[:, :-1] = (H + D)[:, 1:] * beta
        H, U, D = nH, nU, nD
        w[:, s] = H[:, 0] + D[:, 0]
    return TiltedSeries(lam, w[0], w[1], w[2])


# -- excursion transform and first passage ------------------------------------

def decay_root(lam: float) -> float:
    """Decaying root rho of q rho^2 - (1 + q^2 - q + q^3) rho + q = 0.

    Bounded solutions of the killed first-passage equation behave like
    rho^v; the roots are complex below the critical tilt.
    """
    q = math.exp(-lam) / 2.0
    b = 1.0 + q * q - q + q ** 3
    # factored form; b - 2q vanishes at the critical tilt (double root)
    disc = (1.0 - 3.0 * q + q * q + q ** 3) * (b + 2.0 * q)
    if disc < -1e-12:
        raise DivergenceError(f"no decaying root at lambda={lam}: below the critical tilt")
    if abs(disc) <= 16 * np.finfo(float).eps * b * b:
        disc = 0.0  # rounding level: treat as the double root
    return (b - math.sqrt(max(disc, 0.0))) / (2.0 * q)


def first_passage_weights(lam: float, heights: int = 256) -> np.ndarray:
    """g(v), v = 0..heights: tilted weight of first hitting exactly 0 from v.

    g(0) is unused (set to 1).  Solved as a linear system on 1..heights
    with a geometric closure g(w) = g(M) rho^(w-M) beyond the cutoff.
    """
    q = math.exp(-lam) / 2.0
    rho = decay_root(lam)
    M = heights
    v = np.arange(1, M + 1)
    A = q ** (1.0 + np.abs(v[:, None] - v[None, :]))
    A[:, -1] += q ** (1.0 + M - v) * (q * rho) / (1.0 - q * rho)
    b = q ** (1.0 + v)
    g = np.linalg.solve(np.eye(M) - A, b)
    return np.concatenate([[1.0], g])


def G_first_passage(lam: float, heights: int | None = None) -> float:
    """Route (a): first-step analysis of the killed signed walk.

    For lam >= lambda_hat the bounded solution is g(v) = (1 - q/rho) rho^v,
    which sums in closed form.  Passing ``heights`` solves the truncated
    linear system instead (used as a cross-check).
    """
    q = math.exp(-lam) / 2.0
    rho = decay_root(lam)
    if heights is None:
        return q + q * q * (rho - q) / (1.0 - q * rho)
    g = first_passage_weights(lam, heights)
    v = np.arange(1, heights + 1)
    head = q + math.fsum(q ** (1.0 + v) * g[1:])
    tail = g[-1] * q ** (1.0 + heights) * (q * rho) / (1.0 - q * rho)
    return head + tail


def G_partial_sums(lam: float, horizon: int, height_cap: int | None = None) -> np.ndarray:
    """Partial sums G_n = sum over tau <= n of the first-return weight.

    Step-by-step propagation of the killed walk, O(heights) per step via
    geometric filtering.  Returns array of length horizon + 1.
    """
    q = math.exp(-lam) / 2.0
    H = height_cap or max(64, horizon // 2)
    mass = q ** (1.0 + np.arange(H + 1))  # after the first step
    out = np.zeros(horizon + 1)
    acc = 0.0
    for n in range(1, horizon + 1):
        acc += mass[0]
        out[n] = acc
        m = mass.copy()
        m[0] = 0.0
        fwd = lfilter([1.0], [1.0, -q], m)
        bwd = lfilter([1.0], [1.0, -q], m[::-1])[::-1]
        with np.errstate(over="ignore", invalid="ignore"):
            mass = q * (fwd + bwd - m)
        if not np.isfinite(mass).all():
            out[n + 1:] = np.inf
            break
    return out


def K_hat(lam: float, t_max: int = T_STAR_MAX, lam_hat: float | None = None) -> tuple[float, float]:
    """Truncated Laplace transform of K plus a geometric tail bound."""
    lam_hat = lambda_hat_solve() if lam_hat is None else lam_hat
    r = math.exp(lam_hat - lam)
    if r >= 1.0:
        raise DivergenceError(f"K_hat diverges or is not certifiable at lambda={lam}")
    w = tilted_series(float(lam), t_max).w0
    val = math.fsum(w[1:])
    last = w[t_max]
    ratio = max(r, w[t_max] / w[t_max - 1]) if w[t_max - 1] > 0 else r
    if ratio >= 1.0:
        raise DivergenceError("partial sums not Cauchy")
    return val, last * ratio / (1.0 - ratio)


def G_series(lam: float, t_max: int = T_STAR_MAX) -> float:
    """Route (b): G = K_hat / (1 + K_hat)."""
    k, _ = K_hat(lam, t_max)
    return k / (1.0 + k)


def G_of_lambda(lam: float, check: bool = True, rtol: float = 1e-9) -> float:
    """G(lambda), route (a), reconciled against route (b) when that converges."""
    g = G_first_passage(lam)
    if check:
        lh = lambda_hat_solve()
        # the series route is only usefully convergent away from the critical tilt
        if lam - lh > 0.01:
            gb = G_series(lam)
            if abs(g - gb) > rtol * max(1.0, abs(g)):
                raise SolverError(f"G routes disagree at lambda={lam}: {g} vs {gb}")
    return g


# -- tilt parameters ------------------------------------------------------------

@lru_cache(maxsize=1)
def lambda_hat_solve() -> float:
    """Root of log E[exp(-lam |U|)] = lam - log(3/2)."""
    f = lambda lam: math.log(laplace_mgf_abs(lam)) - lam + LOG32
    return brentq(f, 1e-6, 5.0, xtol=1e-16, rtol=4 * np.finfo(float).eps)


def _converging(lam: float, horizons: list[int]) -> bool:
    G = G_partial_sums(lam, horizons[-1])
    if not np.isfinite(G[-1]):
        return False
    diffs = [G[b] - G[a] for a, b in zip(horizons[:-1], horizons[1:])]
    return all(d2 < d1 or d2 == 0.0 for d1, d2 in zip(diffs[:-1], diffs[1:]))


def lambda_double_star_estimate(horizon: int = 4096, base: int = 64, tol: float = 1e-6) -> float:
    """Infimum of tilts at which the step-horizon partial sums of G keep
    contracting under doubling of the horizon.

    The divergence threshold coincides with the critical tilt lambda_hat;
    at any finite horizon this estimate lies strictly below it and the
    gap shrinks roughly like 1/horizon.
    """
    horizons = []
    h = base
    while h <= horizon:
        horizons.append(h)
        h *= 2
    lh = lambda_hat_solve()
    lo, hi = lh / 4.0, lh + 0.05
    if _converging(lo, horizons) or not _converging(hi, horizons):
        raise SolverError("lambda** bracket failure")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _converging(mid, horizons):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class TiltParams:
    lambda_star: float
    lambda_hat: float
    lambda_double_star: float

    @property
    def alpha_star(self) -> float:
        return LOG32 - self.lambda_star

    @property
    def q(self) -> float:
        return math.exp(-self.lambda_star) / 2.0

    @property
    def rho(self) -> float:
        return decay_root(self.lambda_star)


def lambda_star_solve(tolerance: float = 1e-10, estimate_double_star: bool = True) -> TiltParams:
    if tolerance <= 0:
        raise DomainError("tolerance must be positive")
    lh = lambda_hat_solve()
    f = lambda lam: G_first_passage(lam) - 0.5
    lo, hi = lh, 3.0
    if not (f(lo) > 0 > f(hi)):
        raise SolverError(f"bracket failure: G({lo})-1/2={f(lo)}, G({hi})-1/2={f(hi)}")
    ls = brentq(f, lo, hi, xtol=tolerance, rtol=4 * np.finfo(float).eps)
    lds = lambda_double_star_estimate() if estimate_double_star else float("nan")
    if estimate_double_star and not (lds < lh < ls):
        raise SolverError(f"ordering violated: {lds}, {lh}, {ls}")
    return TiltParams(ls, lh, lds)


@lru_cache(maxsize=1)
def default_tilt() -> TiltParams:
    """Tilt used by tables and samplers (tight tolerance, lambda** skipped)."""
    tp = lambda_star_solve(1e-15, estimate_double_star=False)
    if abs(tp.lambda_star - LAMBDA_STAR_REF) > 1e-12:
        raise SolverError(f"lambda* drifted from the pinned constant: {tp.lambda_star!r}")
    return tp


# -- K* and the tilted law ------------------------------------------------------

@lru_cache(maxsize=1)
def K_star_table() -> np.ndarray:
    tp = default_tilt()
    return tilted_series(tp.lambda_star, T_STAR_MAX).w0


def K_star_pmf(t: int) -> float:
    if t < 1:
        return 0.0
    if t > T_STAR_MAX:
        return float(tilted_series(default_tilt().lambda_star, t).w0[t])
    return float(K_star_table()[t])


def K_star_tail(t: int) -> float:
    """P*(T > t), from the table plus the geometric tail estimate."""
    w = K_star_table()
    tp = default_tilt()
    r = math.exp(tp.lambda_hat - tp.lambda_star)
    beyond = w[T_STAR_MAX] * r / (1.0 - r)
    return math.fsum(w[t + 1:]) + beyond


@dataclass(frozen=True)
class EffectiveExcursion:
    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if not self.values or self.values[0] != 0:
            raise DomainError("effective paths start at 0")

    @property
    def increments(self) -> tuple[int, ...]:
        v = self.values
        return tuple(b - a for a, b in zip(v[:-1], v[1:]))

    @property
    def N(self) -> int:
        return len(self.values) - 1

    @property
    def T(self) -> int:
        return self.N + sum(abs(u) for u in self.increments)

    def eps(self, R: int) -> int:
        if R == 0:
            return 1
        return 1 if self.values[-1] == R else 0

    def stats(self, R: int) -> tuple[int, int, int]:
        return self.T, self.N, self.eps(R)


def truncate(V: EffectiveExcursion, R: int) -> EffectiveExcursion:
    if R < 0:
        raise DomainError("R must be >= 0")
    vals = V.values
    for i in range(1, len(vals)):
        if vals[i] >= R + 1:
            return EffectiveExcursion(vals[:i] + (R,))
    return V


@lru_cache(maxsize=256)
def _conditional_table(t: int, q: float) -> np.ndarray:
    """Z[r, v]: weight q^r of completions using exactly r more lattice
    units from height v (after at least one step), ending at 0."""
    Z = np.zeros((t + 1, t + 2))
    Z[0, 0] = 1.0
    up = np.zeros((t + 1, t + 2))  # sum_{u>=0} q^(1+u) Z[r-1-u, v+u]
    dn = np.zeros((t + 1, t + 2))  # sum_{u>=1} q^(1+u) Z[r-1-u, v-u]
    for r in range(1, t + 1):
        up[r, :-1] = q * Z[r - 1, :-1] + q * up[r - 1, 1:]
        if r >= 2:
            dn[r, 1:] = q * q * Z[r - 2, :-1] + q * dn[r - 1, :-1]
        Z[r] = up[r] + dn[r]
    return Z


def sample_excursion_given_length(t: int, rng: np.random.Generator,
                                  tilt: TiltParams | None = None) -> EffectiveExcursion:
    """Tilted excursion conditioned on lattice length t (backward DP).

    Conditionally on T = t the tilted law is uniform on I_t.
    """
    if t < 1:
        raise DomainError("t must be >= 1")
    tilt = tilt or default_tilt()
    q = tilt.q
    Z = _conditional_table(t, q)
    vals = [0]
    r, v = t, 0
    while r > 0:
        us = np.arange(-v, r)
        cost = 1 + np.abs(us)
        ok = cost <= r
        us, cost = us[ok], cost[ok]
        w = q ** cost * Z[r - cost, v + us]
        k = int(np.searchsorted(np.cumsum(w), rng.random() * w.sum(), side="right"))
        k = min(k, len(us) - 1)
        v += int(us[k])
        r -= int(cost[k])
        vals.append(v)
    return EffectiveExcursion(tuple(vals))


@lru_cache(maxsize=1)
def _K_star_cdf() -> np.ndarray:
    c = np.cumsum(K_star_table())
    return c / c[-1]


def sample_excursion_pstar(rng: np.random.Generator, tilt: TiltParams | None = None,
                           method: str = "two-stage") -> EffectiveExcursion:
    """Draw an excursion from the tilted law.

    ``two-stage`` draws T from K* and then the path from the backward DP;
    ``chain`` runs the h-transformed Markov chain of the effective walk.
    """
    tilt = tilt or default_tilt()
    if method == "two-stage":
        t = int(np.searchsorted(_K_star_cdf(), rng.random(), side="right"))
        return sample_excursion_given_length(max(t, 1), rng, tilt)
    if method == "chain":
        buf = np.empty(1 << 20, dtype=np.int64)
        n, t, st = _kernels.pstar_excursion(rng, tilt.q, tilt.rho, -1, buf, (1 << 20) - 2)
        if st != 0:
            raise CapacityError("excursion exceeded the chain buffer")
        return EffectiveExcursion(tuple(buf[: n + 1]))
    raise DomainError(f"unknown method {method!r}")


# -- strip tables ---------------------------------------------------------------

def overshoot_factor(R: int, tilt: TiltParams | None = None, heights: int = 256) -> float:
    """kappa_R = sum_{k>=0} q^(1+k) h(R+1+k), with h the continuation
    weight g / (1 - G) above level R."""
    tilt = tilt or default_tilt()
    lam = tilt.lambda_star
    q, rho = tilt.q, tilt.rho
    g = first_passage_weights(lam, heights)
    scale = 1.0 / (1.0 - G_first_passage(lam, heights))
    k = np.arange(0, heights + 1)
    w = R + 1 + k
    gw = np.where(w <= heights, g[np.minimum(w, heights)], g[heights] * rho ** (w - heights).astype(float))
    head = math.fsum(q ** (1.0 + k) * gw)
    # remaining k > heights: geometric in q rho
    last = gw[-1]
    tail = last * q ** (1.0 + heights) * (q * rho) / (1.0 - q * rho)
    return scale * (head + tail)


@lru_cache(maxsize=1)
def log_overshoot_table(R_max: int = 1 << 15) -> tuple[float, np.ndarray]:
    """(log(1 + kappa_0), log kappa_R for R = 0..R_max)."""
    tilt = default_tilt()
    base = np.array([overshoot_factor(R, tilt) for R in range(0, 64)])
    # kappa_R is geometric in R beyond the first few levels
    ratio = base[-1] / base[-2]
    R = np.arange(R_max + 1)
    logk = np.empty(R_max + 1)
    logk[:64] = np.log(base)
    logk[64:] = math.log(base[-1]) + (R[64:] - 63) * math.log(ratio)
    return math.log1p(base[0]), logk


@dataclass(frozen=True)
class StripTables:
    R: int
    t_max: int
    L: np.ndarray  # [t, n, eps]
    L_hat: np.ndarray  # [t, n]
    L_star: np.ndarray | None = None  # [t, n, eps]

    def L_total(self, t: int, eps: int) -> float:
        return float(self.L[t, :, eps].sum())

    def L_hat_total(self, t: int) -> float:
        return 1.0 if t == 0 else float(self.L_hat[t].sum())


def _confined_states(R: int, t_max: int, beta: float) -> np.ndarray:
    """S[t, n, v]: weight of confined effective paths with lattice length
    t, n increments and final height v (all lattice modes merged)."""
    S = np.zeros((t_max + 1, t_max + 1, R + 1))
    cur = np.zeros((3, t_max + 1, R + 1))
    if t_max >= 1:
        cur[0, 1, 0] = beta
        S[1] = cur.sum(axis=0)
    for t in range(2, t_max + 1):
        nxt = np.zeros_like(cur)
        tot = cur.sum(axis=0)
        nxt[0, 1:, :] = tot[:-1, :] * beta
        if R >= 1:
            nxt[1, :, 1:] = (cur[0] + cur[1])[:, :-1] * beta
            nxt[2, :, :-1] = (cur[0] + cur[2])[:, 1:] * beta
        cur = nxt
        S[t] = cur.sum(axis=0)
    return S


def _check_budget(R: int, t_max: int) -> None:
    if R < 0 or t_max < 1:
        raise DomainError("need R >= 0 and t_max >= 1")
    if (R + 1) * (t_max + 1) ** 2 * 4 > STRIP_BUDGET:
        raise CapacityError(f"strip table (R={R}, t_max={t_max}) exceeds the memory budget")


def strip_tables(R: int, t_max: int, tilt: TiltParams | None = None) -> StripTables:
    _check_budget(R, t_max)
    tilt = tilt or default_tilt()
    S = _confined_states(R, t_max, tilt.q)
    Lt = np.zeros((t_max + 1, t_max + 1, 2))
    Lt[:, :, 1] = S[:, :, R]
    if R >= 1:
        Lt[:, :, 0] = S[:, :, 0]
    Lh = S[:, :, 1:R].sum(axis=2) if R >= 2 else np.zeros((t_max + 1, t_max + 1))
    return StripTables(R, t_max, Lt, Lh)


def strip_tables_star(R: int, t_max: int, tilt: TiltParams | None = None) -> StripTables:
    """Adds the truncated law L*_R.

    A truncated image consists of a confined prefix ending at v followed
    by a final increment to R; its tilted mass collects every overshoot
    R+1+k together with the continuation weight from there.
    """
    base = strip_tables(R, t_max, tilt)
    tilt = tilt or default_tilt()
    q = tilt.q
    lam = tilt.lambda_star
    g = first_passage_weights(lam)
    cont = g / (1.0 - G_first_passage(lam))  # continuation weight h(w), w >= 1
    rho = tilt.rho

    def h(w):
        return cont[w] if w < len(cont) else cont[-1] * rho ** (w - len(cont) + 1)

    # layer[j] = sum_{k>=0} q^(1+(R+1+k-v)) h(R+1+k) / q^(1+R-v), independent of v
    ks = np.arange(0, 400)
    layer = math.fsum(q ** (1.0 + ks[i]) * h(R + 1 + ks[i]) for i in range(len(ks)))
    S = _confined_states(R, t_max, q)
    star = np.zeros_like(base.L)
    star[:, :, 0] = base.L[:, :, 0]
    # prefix with n-1 increments, length t - 1 - (R - v), ending at v;
    # final increment R - v contributes weight q^(1+R-v) times the layer
    for v in range(R + 1):
        c = 1 + R - v
        star[c + 1:, 1:, 1] += S[1:t_max + 1 - c, :-1, v] * q ** c * layer
    # the first increment can itself overshoot (empty prefix at height 0)
    # and lands with length 1 + R
    if 1 + R <= t_max:
        star[1 + R, 1, 1] += q ** (1 + R) * layer
    if R == 0:
        star[:, :, 1] += base.L[:, :, 1]
    return StripTables(R, t_max, base.L, base.L_hat, star)


def slab_totals(R: int, t_max: int, tilt: TiltParams | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """n-summed L_R(t, 0), L_R(t, 1), L_hat_R(t) for t = 0..t_max (compiled)."""
    tilt = tilt or default_tilt()
    return _kernels.slab_forward(R, t_max, tilt.q)


# -- reflection and folding maps ------------------------------------------------

def in_strip(vals, R: int) -> bool:
    return all(0 <= v <= R for v in vals) and vals[0] == 0


def reflect_G(vals: tuple[int, ...], R: int) -> tuple[tuple[int, ...], int]:
    """Reflection across R/2 of a strip path ending at R.

    Returns (image, case).  Case 1: the path hits R/2 exactly at its first
    passage time and is reflected from there.  Case 2: it jumps over R/2
    and two increments are inserted.
    """
    if R % 2:
        raise NotImplementedError("odd R is not supported")
    V = tuple(vals)
    if V[-1] != R or not in_strip(V, R):
        raise DomainError("expects a strip path ending at R")
    half = R // 2
    tau = next(i for i, x in enumerate(V) if x >= half)
    if V[tau] == half:
        return V[:tau] + tuple(R - x for x in V[tau:]), 1
    y = V[tau] - half
    n = len(V) - 1
    out = list(V[:tau]) + [half - 1]
    out += [R - V[i - 1] for i in range(tau + 1, n + 2)]
    out.append(0)
    assert len(out) == n + 3 and y >= 1
    return tuple(out), 2


def split_points(vals: tuple[int, ...], x: int) -> tuple[int, int]:
    """(sigma, sigma~): last time below x/2, first time after it at or above x."""
    half = x / 2
    sigma = max(i for i, v in enumerate(vals) if v < half)
    sigma_t = next(i for i in range(sigma + 1, len(vals)) if vals[i] >= x)
    return sigma, sigma_t


def fold_case(vals: tuple[int, ...], x: int) -> int:
    s, st = split_points(vals, x)
    a = vals[s + 1] > x // 2
    b = vals[st] > x
    return {(True, True): 1, (True, False): 2, (False, True): 3, (False, False): 4}[(a, b)]


def fold_H(vals: tuple[int, ...], R: int, x: int) -> tuple[int, ...]:
    """Lower the part after sigma~ by x/2 and append the reflected middle.

    The construction preserves the sum of absolute increments in every
    case (only the junction where the middle is re-attached can produce a
    zero increment), so it is applied uniformly.
    """
    if x % 2:
        raise NotImplementedError("odd x is not supported")
    V = tuple(vals)
    n = len(V) - 1
    if not (0 < x < R) or V[-1] != x or not in_strip(V, R):
        raise DomainError("expects a strip path ending at x with 0 < x < R")
    s, st = split_points(V, x)
    half = x // 2
    out = list(V[: s + 1]) + [half]
    out += [V[st + i - 1] - half for i in range(1, n + 2 - st)]
    out += [x - V[s + i] for i in range(1, st - s)]
    out.append(0)
    assert len(out) == n + 3
    return tuple(out)


def strip_paths(R: int, t: int, end: int | None = None):
    """All confined effective paths with lattice length exactly t."""
    out = []
    cur = [0]

    def rec(used):
        if used == t:
            if end is None or cur[-1] == end:
                out.append(tuple(cur))
            return
        v = cur[-1]
        for nv in range(0, R + 1):
            c = 1 + abs(nv - v)
            if used + c > t:
                continue
            cur.append(nv)
            rec(used + c)
            cur.pop()

    rec(0)
    return out


def path_length(vals) -> int:
    return (len(vals) - 1) + sum(abs(b - a) for a, b in zip(vals[:-1], vals[1:]))


# -- finite checks of the strip inequalities -------------------------------------

def fold_constant(tilt: TiltParams | None = None) -> float:
    """Explicit constant of the folding bound: 4 * 9 * exp(-2 log(3/2) + 2 lambda*)."""
    tilt = tilt or default_tilt()
    return 4.0 * 9.0 * math.exp(-2.0 * LOG32 + 2.0 * tilt.lambda_star)


def reflection_inequality_table(R_values, t_max: int, tilt: TiltParams | None = None) -> list[tuple]:
    """Rows (R, t, L_R(t,1), 2t L_R(t,0), holds) with n summed out."""
    tilt = tilt or default_tilt()
    rows = []
    for R in R_values:
        e0, eR, _ = slab_totals(R, t_max, tilt)
        for t in range(1, t_max + 1):
            lhs, rhs = eR[t], 2 * t * e0[t]
            rows.append((R, t, lhs, rhs, bool(lhs <= rhs * (1 + 1e-12))))
    return rows


def fold_inequality_table(R_values, t_max: int, tilt: TiltParams | None = None) -> list[tuple]:
    """Rows (R, t, L_hat_R(t), C R t^2 L_R(t+2,0), holds)."""
    tilt = tilt or default_tilt()
    C = fold_constant(tilt)
    rows = []
    for R in R_values:
        e0, _, inner = slab_totals(R, t_max + 2, tilt)
        for t in range(1, t_max + 1):
            lhs, rhs = inner[t], C * R * t * t * e0[t + 2]
            rows.append((R, t, lhs, rhs, bool(lhs <= rhs * (1 + 1e-12))))
    return rows
