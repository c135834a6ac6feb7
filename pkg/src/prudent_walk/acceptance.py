"""Acceptance checks, shared by the ``verify`` command and the test suite.

Every check returns CheckResult rows; nothing here raises on a failed bar.
"""

from __future__ import annotations

import math
import subprocess
import sys
import tempfile
import time
from collections import Counter
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.stats import chisquare

from prudent_walk import effective_walk as ew
from prudent_walk import enumeration_oracle as eo
from prudent_walk import samplers as S
from prudent_walk import scaling_analysis as sa
from prudent_walk.lattice_core import LatticePath

DEFAULT_SEED = 20240601


@dataclass(frozen=True)
class CheckResult:
    criterion: int
    name: str
    passed: bool
    value: object
    threshold: str
    seconds: float = 0.0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = bool(d["passed"])
        if isinstance(d["value"], (np.floating, np.integer)):
            d["value"] = d["value"].item()
        return d

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} [{self.criterion}] {self.name}: value={self.value} bar={self.threshold}"


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


# 1 ------------------------------------------------------------------------------

def criterion_1(seed: int = DEFAULT_SEED) -> list[CheckResult]:
    out = []
    with _Timer() as tm:
        omega = [eo.enumerate_prudent(L).count for L in (1, 2, 3)]
        excursions = [eo.count_excursion_set(t) for t in (1, 2, 4)]
        counts = ew.excursion_count_table(10)
        K = [Fraction(0)] + [Fraction(counts[t], 2 ** t) for t in range(1, 11)]
        f = [Fraction(1)] + [Fraction(0)] * 10
        for L in range(1, 11):
            f[L] = sum(K[t] * f[L - t] for t in range(1, L + 1))
        worst = 0.0
        for L in range(1, 11):
            lhs = Fraction(eo.enumerate_two_sided_plus(L).count, 2 ** L)
            worst = max(worst, abs(float(lhs - f[L])))
    out.append(CheckResult(1, "prudent counts L=1..3", omega == [4, 12, 36], omega, "[4, 12, 36]"))
    out.append(CheckResult(1, "excursion set sizes t=1,2,4", excursions == [1, 1, 2], excursions,
                           "[1, 1, 2]"))
    out.append(CheckResult(1, "two-sided renewal identity L<=10", worst <= 1e-10, worst, "<= 1e-10"))
    out.append(CheckResult(1, "runtime", tm.seconds < 60, round(tm.seconds, 2), "< 60 s", tm.seconds))
    return out


# 2 ------------------------------------------------------------------------------

def criterion_2(seed: int = DEFAULT_SEED) -> list[CheckResult]:
    with _Timer() as tm:
        tp = ew.lambda_star_solve(1e-10)
        k_star, _ = ew.K_hat(tp.lambda_star)
        g_hat = ew.G_of_lambda(tp.lambda_hat, check=False)
        target = 0.5 + math.exp(-2 * tp.lambda_hat) / 8
    return [
        CheckResult(2, "K_hat(lambda*) via series", abs(k_star - 1) <= 1e-8, k_star, "1 +- 1e-8"),
        CheckResult(2, "G(lambda_hat) closed form", abs(g_hat - target) <= 1e-10, g_hat - target,
                    "|residual| <= 1e-10"),
        CheckResult(2, "ordering lambda** < lambda_hat < lambda*",
                    tp.lambda_double_star < tp.lambda_hat < tp.lambda_star,
                    [tp.lambda_double_star, tp.lambda_hat, tp.lambda_star], "strictly increasing"),
        CheckResult(2, "runtime", tm.seconds < 60, round(tm.seconds, 2), "< 60 s", tm.seconds),
    ]


# 3 ------------------------------------------------------------------------------

def criterion_3(seed: int = DEFAULT_SEED, n: int = 100_000) -> list[CheckResult]:
    lit, per_step = [], []
    for L in range(1, 9):
        paths = [LatticePath(s) for s in eo.iter_prudent(L)]
        lit.append(math.fsum(S.kinetic_formula_literal(p) for p in paths))
        per_step.append(math.fsum(S.kinetic_probability(p) for p in paths))
    worst_lit = max(abs(x - 1) for x in lit)
    worst_ps = max(abs(x - 1) for x in per_step)
    fam = list(eo.iter_prudent(5))
    idx = {s: i for i, s in enumerate(fam)}
    obs = np.zeros(len(fam))
    for j in range(n):
        obs[idx[S.sample_kinetic(5, S.make_stream(seed, 3, j)).steps]] += 1
    exp = np.array([S.kinetic_probability(LatticePath(s)) for s in fam])
    p = float(chisquare(obs, exp / exp.sum() * n).pvalue)
    return [
        CheckResult(3, "closed-form kinetic weight sums to 1 over Omega_L, L<=8",
                    worst_lit <= 1e-12, [round(x, 15) for x in lit], "1 +- 1e-12"),
        CheckResult(3, "per-step kinetic law sums to 1 over Omega_L, L<=8",
                    worst_ps <= 1e-12, worst_ps, "|sum - 1| <= 1e-12"),
        CheckResult(3, "kinetic sampler chi2 at L=5", p > 0.01, p, "p > 0.01"),
    ]


# 4 ------------------------------------------------------------------------------

def criterion_4(seed: int = DEFAULT_SEED, n: int = 100_000, lengths=(6, 8, 10)) -> list[CheckResult]:
    out = []
    for L in lengths:
        fam = list(eo.iter_two_sided_plus(L))
        idx = {s: i for i, s in enumerate(fam)}
        obs = np.zeros(len(fam))
        outside = 0
        for j in range(n):
            s = S.sample_two_sided_uniform(L, S.make_stream(seed, 4, L * n + j)).steps
            if s in idx:
                obs[idx[s]] += 1
            else:
                outside += 1
        p = float(chisquare(obs).pvalue) if outside == 0 else 0.0
        out.append(CheckResult(4, f"two-sided sampler chi2 at L={L}", p > 0.01 and outside == 0,
                               p, "p > 0.01, no path outside the family"))
    return out


# 5 ------------------------------------------------------------------------------

def criterion_5(seed: int = DEFAULT_SEED, n: int = 100_000, lengths=(6, 10)) -> list[CheckResult]:
    out = []
    for L in lengths:
        fam = list(eo.iter_prudent(L, reduced=True))
        exact = Counter(LatticePath(s).endpoint for s in fam)
        sm = S.ISSampler(L)
        lw = np.empty(n)
        ends = []
        for j in range(n):
            k, tail, logw = sm.draw_raw(S.make_stream(seed, 5, L * n + j))
            lw[j] = logw
            x = int((sm.steps == 0).sum() - (sm.steps == 2).sum())
            y = int((sm.steps == 1).sum() - (sm.steps == 3).sum())
            ends.append((x, y))
        p = sa.normalized_weights(lw, n)
        keys = sorted(set(exact) | set(ends))
        pos = {k: i for i, k in enumerate(keys)}
        cls = np.array([pos[e] for e in ends])
        zmax = 0.0
        for k in keys:
            target = exact[k] / len(fam)
            f = (cls == pos[k]).astype(float)
            est = float(np.sum(p * f))
            se = math.sqrt(float(np.sum(p * p * (f - target) ** 2)))
            zmax = max(zmax, abs(est - target) / se if se > 0 else (0.0 if est == target else math.inf))
        out.append(CheckResult(5, f"IS endpoint law vs oracle at L={L}", zmax <= 3.0, zmax,
                               "max |z| <= 3 over endpoints"))
    # strip identity behind the unit factor
    worst = 0.0
    for R in range(0, 9):
        st = ew.strip_tables_star(R, 60)
        worst = max(worst, float(np.abs(st.L_star[:, :, 0] - st.L[:, :, 0]).max()))
    out.append(CheckResult(5, "L*_R(t,n,0) = L_R(t,n,0), R<=8, t<=60", worst == 0.0, worst, "exactly 0"))
    # sampled weights on configurations without crossings past the first excursion
    sm = S.ISSampler(40)
    ws = []
    for j in range(2000):
        k, tail, logw = sm.draw_raw(S.make_stream(seed, 55, j))
        if tail == 0 and not sm.rec[1:k, 2].any():
            ws.append(math.exp(logw))
    dev = max(abs(w - 1.0) for w in ws) if ws else math.inf
    out.append(CheckResult(5, "weight of all-eps0 configurations (L=40)", dev <= 1e-12,
                           ws[0] if ws else None, "exactly 1"))
    return out


# 6 ------------------------------------------------------------------------------

def criterion_6(seed: int = DEFAULT_SEED) -> list[CheckResult]:
    Rs = range(2, 11, 2)
    refl = ew.reflection_inequality_table(Rs, 30)
    fold = ew.fold_inequality_table(Rs, 30)
    out = [
        CheckResult(6, "L_R(t,1) <= 2t L_R(t,0), even R in 2..10, t<=30",
                    all(r[4] for r in refl), sum(not r[4] for r in refl), "0 violations"),
        CheckResult(6, "L_hat_R(t) <= C R t^2 L_R(t+2,0), even R in 2..10, t<=30",
                    all(r[4] for r in fold), sum(not r[4] for r in fold),
                    f"0 violations, C={ew.fold_constant():.6g}"),
    ]
    bad_g = bad_h = viol_g = viol_h = 0
    for R in (2, 4, 6):
        for t in range(1, 15):
            pre: dict = {}
            for V in ew.strip_paths(R, t, end=R):
                W, case = ew.reflect_G(V, R)
                n = len(V) - 1
                ok = (ew.in_strip(W, R) and W[-1] == 0 and ew.path_length(W) == t
                      and len(W) - 1 == (n if case == 1 else n + 2))
                bad_g += not ok
                pre.setdefault(W, []).append(n)
            viol_g += sum(1 for ns in pre.values() if len(ns) > min(ns))
            for x in range(2, R, 2):
                preh = Counter()
                for V in ew.strip_paths(R, t, end=x):
                    W = ew.fold_H(V, R, x)
                    n = len(V) - 1
                    ok = (ew.in_strip(W, R) and W[-1] == 0 and ew.path_length(W) == t + 2
                          and len(W) - 1 == n + 2)
                    bad_h += not ok
                    preh[W] += 1
                viol_h += sum(1 for W, c in preh.items() if c > (len(W) - 3) ** 2)
    out.append(CheckResult(6, "reflection lands in the target sets, R<=6, t<=14", bad_g == 0, bad_g,
                           "0 misses"))
    out.append(CheckResult(6, "reflection preimages <= n", viol_g == 0, viol_g, "0 violations"))
    out.append(CheckResult(6, "folding lands in the target sets, R<=6, t<=14", bad_h == 0, bad_h,
                           "0 misses"))
    out.append(CheckResult(6, "folding preimages <= n^2", viol_h == 0, viol_h, "0 violations"))
    return out


# 7 ------------------------------------------------------------------------------

def criterion_7(seed: int = DEFAULT_SEED, n_two_sided: int = 10_000,
                n_is: int = 100_000) -> list[CheckResult]:
    with _Timer() as tm:
        L = 10_000
        c = sa.speed_c()
        d = sa.draws("two-sided", L, n_two_sided, seed, 1)
        zs = []
        for col in ("x_end", "y_end"):
            v = d[col] / L
            zs.append(abs(v.mean() - c) / (v.std(ddof=1) / math.sqrt(len(v))))
        conc = sa.concentration_report("two-sided", L, 0.05, n_two_sided, seed, 1)
        conc_is = sa.concentration_report("uniform-is", 1000, 0.1, n_is, seed, 1)
    return [
        CheckResult(7, "two-sided endpoint/L vs (c, c) at L=1e4", max(zs) <= 3.0,
                    [float(z) for z in zs], "|z| <= 3"),
        CheckResult(7, "two-sided concentration at (1e4, 0.05)", conc.freq >= 0.99, conc.freq, ">= 0.99"),
        CheckResult(7, "uniform-IS concentration at (1e3, 0.1)", conc_is.freq >= 0.95,
                    [conc_is.freq, conc_is.stderr], ">= 0.95 (value, stderr)"),
        CheckResult(7, "runtime", tm.seconds < 600, round(tm.seconds, 1), "< 600 s", tm.seconds),
    ]


# 8 ------------------------------------------------------------------------------

def criterion_8(seed: int = DEFAULT_SEED, n: int = 100_000) -> list[CheckResult]:
    L = 10_000
    rep = sa.clt_report(L, n, seed, 1)
    sigma = sa.covariance_B()
    c11 = rep.cov[(1.0, 1.0)]
    rel = float(np.linalg.norm(c11 - sigma) / np.linalg.norm(sigma))
    c51 = rep.cov[(0.5, 1.0)]
    half = 0.5 * sigma
    ent = float(np.max(np.abs(c51 - half) / np.abs(half)))
    return [
        CheckResult(8, "Cov(1,1) vs Sigma, Frobenius", rel <= 0.05, rel, "<= 0.05"),
        CheckResult(8, "Cov(0.5,1) vs Sigma/2, entrywise", ent <= 0.10, ent, "<= 0.10"),
    ]


# 9 ------------------------------------------------------------------------------

def criterion_9(seed: int = DEFAULT_SEED, n: int = 100_000) -> list[CheckResult]:
    q = sa.quadrant_distribution("uniform-is", 1000, n, seed, 1)
    inside = all(0.23 <= f <= 0.27 for f in q.freq[1:])
    return [
        CheckResult(9, "quadrant classes 1..4 in [0.23, 0.27] at L=1e3", inside,
                    [round(f, 6) for f in q.freq[1:]], "[0.23, 0.27]"),
        CheckResult(9, "axis class mass at L=1e3", q.freq[0] < 0.04, q.freq[0], "< 0.04"),
    ]


# 10 -----------------------------------------------------------------------------

def criterion_10(seed: int = DEFAULT_SEED, n: int = 10_000) -> list[CheckResult]:
    Ls = (2 ** 8, 2 ** 10, 2 ** 12, 2 ** 14)
    reps = [sa.crossing_report(L, n, seed, 1) for L in Ls]
    out = []
    for name in ("late_crossing", "long_head", "long_tail"):
        ests = [getattr(r, name) for r in reps]
        ok = all(b.value <= a.value + 2 * math.hypot(a.stderr, b.stderr)
                 for a, b in zip(ests[:-1], ests[1:]))
        out.append(CheckResult(10, f"{name} non-increasing over L=2^8..2^14", ok,
                               [e.value for e in ests], "within 2 sigma"))
    e1 = [r.eps1_freq for r in reps]
    out.append(CheckResult(10, "first excursion crosses", all(x == 1.0 for x in e1), e1, "exactly 1"))
    return out


# 11 -----------------------------------------------------------------------------

def criterion_11(seed: int = DEFAULT_SEED) -> list[CheckResult]:
    args = ["report", "--L", "300", "--n", "400", "--seed", str(seed), "--workers", "2"]
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for i in range(2):
            path = Path(tmp) / f"r{i}.json"
            subprocess.run([sys.executable, "-m", "prudent_walk", *args, "--out", str(path)],
                           check=True, capture_output=True)
            blobs.append(path.read_bytes())
    return [CheckResult(11, "report byte-identical across runs", blobs[0] == blobs[1],
                        len(blobs[0]), "identical bytes")]


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
            11: criterion_11}


def run_all(only=None, seed: int = DEFAULT_SEED) -> list[CheckResult]:
    out = []
    for k in sorted(CRITERIA):
        if only and k not in only:
            continue
        out.extend(CRITERIA[k](seed))
    return out
