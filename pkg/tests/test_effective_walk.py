import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from prudent_walk import effective_walk as ew
from prudent_walk.enumeration_oracle import count_excursion_set
from prudent_walk.errors import CapacityError, DivergenceError, DomainError

LAMBDA_HAT = math.log((1 + math.sqrt(2)) / 2)


def test_laplace_pmf():
    assert ew.laplace_pmf(0) == pytest.approx(1 / 3)
    assert ew.laplace_pmf(2) == pytest.approx(1 / 12)
    assert ew.laplace_pmf(-2) == ew.laplace_pmf(2)
    assert abs(math.fsum(ew.laplace_pmf(x) for x in range(-60, 61)) - 1) < 1e-15


def test_laplace_mgf():
    assert ew.laplace_mgf_abs(math.log(2)) == pytest.approx(5 / 9, abs=1e-15)
    assert ew.laplace_mgf_abs(50.0) == pytest.approx(1 / 3)
    for lam in np.arange(0.1, 5.01, 0.1):
        direct = math.fsum(ew.laplace_pmf(x) * math.exp(-lam * abs(x)) for x in range(-200, 201))
        assert abs(ew.laplace_mgf_abs(lam) - direct) < 1e-13
    with pytest.raises(DomainError):
        ew.laplace_mgf_abs(0.0)


def test_K_exact():
    assert ew.K_exact(1) == 0.5
    assert ew.K_exact(2) == 0.25
    assert ew.K_exact(4) == 0.125
    for t in range(1, 19):
        assert ew.K_exact(t) == count_excursion_set(t) / 2 ** t


def test_K_exact_large_t_matches_lattice_dp():
    assert ew.K_exact(70) == pytest.approx(ew.excursion_count_table(70)[70] / 2 ** 70, rel=1e-12)


def test_critical_tilt():
    lh = ew.lambda_hat_solve()
    assert lh == pytest.approx(LAMBDA_HAT, abs=1e-15)
    # martingale identity
    assert abs(math.exp(math.log(1.5) - lh) * ew.laplace_mgf_abs(lh) - 1) < 1e-12
    assert abs(ew.G_of_lambda(lh, check=False) - (0.5 + math.exp(-2 * lh) / 8)) < 1e-10
    assert 0.5 < ew.G_of_lambda(lh, check=False) < 1


def test_decay_root_below_critical():
    with pytest.raises(DivergenceError):
        ew.decay_root(0.1)


def test_G_routes_agree():
    for lam in (0.2, 0.25, 0.3, 0.5, 1.0, 2.0):
        a = ew.G_first_passage(lam)
        assert abs(a - ew.G_series(lam)) < 1e-9
        assert abs(a - ew.G_first_passage(lam, heights=256)) < 1e-9
        k, _ = ew.K_hat(lam)
        assert k == pytest.approx(a / (1 - a), rel=1e-9)


def test_G_partial_sums_converge_above_critical():
    G = ew.G_partial_sums(0.3, 512)
    assert G[-1] == pytest.approx(ew.G_first_passage(0.3), rel=1e-12)


def test_K_hat():
    k, tail = ew.K_hat(10.0)
    assert k == pytest.approx(2.27e-5, rel=1e-2)
    vals = [ew.K_hat(l)[0] for l in (0.2, 0.3, 0.5, 1.0)]
    assert all(a > b for a, b in zip(vals[:-1], vals[1:]))
    with pytest.raises(DivergenceError):
        ew.K_hat(0.15)


def test_tilt_solver():
    tp = ew.lambda_star_solve(1e-10)
    assert tp.lambda_double_star < tp.lambda_hat < tp.lambda_star
    assert tp.lambda_star == pytest.approx(ew.LAMBDA_STAR_REF, abs=1e-10)
    assert tp.alpha_star == pytest.approx(math.log(1.5) - tp.lambda_star)
    assert abs(ew.K_hat(tp.lambda_star)[0] - 1) <= 1e-9
    assert ew.G_of_lambda(tp.lambda_star) == pytest.approx(0.5, abs=1e-10)
    with pytest.raises(DomainError):
        ew.lambda_star_solve(0.0)


def test_tilt_closed_forms():
    # q* solves 2q^3 - 2q^2 - 2q + 1 = 0 and rho* = 2 q*
    tp = ew.default_tilt()
    q = tp.q
    assert abs(2 * q ** 3 - 2 * q ** 2 - 2 * q + 1) < 1e-14
    assert tp.rho == pytest.approx(2 * q, rel=1e-13)


def test_K_star():
    tp = ew.default_tilt()
    assert ew.K_star_pmf(1) == pytest.approx(math.exp(-tp.lambda_star) / 2, rel=1e-14)
    total = math.fsum(ew.K_star_table())
    assert 1 - ew.K_star_tail(ew.T_STAR_MAX) - 1e-12 <= total <= 1 + 1e-12
    logs = np.log(ew.K_star_table()[10:400])
    assert np.all(np.diff(logs) < 0)
    # geometric ratio used by the tail bound
    w = ew.K_star_table()
    assert np.all(w[1001:] / w[1000:-1] <= math.exp(tp.lambda_hat - tp.lambda_star) + 1e-15)


def test_effective_excursion():
    v = ew.EffectiveExcursion((0, 1, 0))
    assert v.increments == (1, -1) and v.N == 2 and v.T == 4
    with pytest.raises(DomainError):
        ew.EffectiveExcursion((1, 0))


def test_truncate_examples():
    v = ew.EffectiveExcursion((0, 0))
    assert ew.truncate(v, 5) == v
    t = ew.truncate(ew.EffectiveExcursion((0, 3, 0)), 2)
    assert t.values == (0, 2)
    assert t.stats(2) == (3, 1, 1)
    assert ew.truncate(ew.EffectiveExcursion((0, 1, 0)), 0).eps(0) == 1


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=8), st.integers(0, 6))
def test_truncate_definition(path, R):
    vals = (0,) + tuple(path)
    out = ew.truncate(ew.EffectiveExcursion(vals), R).values
    cut = next((i for i, x in enumerate(vals) if x > R), None)
    if cut is None:
        assert out == vals
    else:
        assert out == vals[:cut] + (R,)
        assert max(out) <= R


def test_conditional_sampler_weights_at_t4():
    # T = 4: flat (n=4) and up-down (n=2) excursions are equally likely
    rng = np.random.default_rng(2)
    c = Counter(ew.sample_excursion_given_length(4, rng).values for _ in range(20_000))
    assert set(c) == {(0, 0, 0, 0, 0), (0, 1, 0)}
    assert abs(c[(0, 1, 0)] / 20_000 - 0.5) < 0.015


@pytest.mark.parametrize("method", ["two-stage", "chain"])
def test_pstar_length_marginal(method):
    rng = np.random.default_rng(11)
    n = 20_000 if method == "two-stage" else 60_000
    T = np.array([ew.sample_excursion_pstar(rng, method=method).T for _ in range(n)])
    w = ew.K_star_table()
    bins = np.arange(1, 21)
    obs = np.array([(T == t).sum() for t in bins] + [(T > 20).sum()])
    exp = np.array([w[t] for t in bins] + [1 - w[1:21].sum()]) * n
    assert chisquare(obs, exp * obs.sum() / exp.sum()).pvalue > 1e-3


def test_strip_tables_invariants():
    st_ = ew.strip_tables_star(4, 400)
    assert np.all(st_.L_star[:, :, 0] == st_.L[:, :, 0])
    assert np.all(st_.L[:4, :, 1] == 0)
    assert abs(st_.L_star.sum() - 1) < 1e-12
    assert st_.L_hat_total(0) == 1.0
    z = ew.strip_tables_star(0, 200)
    assert np.all(z.L[:, :, 0] == 0)
    # all truncated mass carries eps = 1; flat excursions keep n >= 1 increments
    assert np.all(z.L_star[:, :, 0] == 0) and abs(z.L_star[:, :, 1].sum() - 1) < 1e-12
    assert z.L_star[2, 2, 1] > 0


def test_strip_tables_unconfined_limit():
    st_ = ew.strip_tables(40, 40)
    for t in range(1, 41):
        assert st_.L_total(t, 0) == pytest.approx(ew.K_star_pmf(t), rel=1e-12)


def test_overshoot_proportionality():
    tp = ew.default_tilt()
    k0 = (1 - 2 * tp.q) / tp.q
    for R in range(1, 8):
        st_ = ew.strip_tables_star(R, 30)
        k = ew.overshoot_factor(R)
        assert k == pytest.approx(k0 * tp.rho ** R, rel=1e-12)
        assert np.allclose(st_.L_star[:, :, 1], k * st_.L[:, :, 1], rtol=1e-12, atol=0)


def test_strip_budget():
    with pytest.raises(CapacityError):
        ew.strip_tables(2000, 2000)


def test_slab_totals_match_tables():
    e0, eR, inner = ew.slab_totals(6, 50)
    st_ = ew.strip_tables(6, 50)
    assert np.allclose(e0, st_.L[:, :, 0].sum(1), rtol=1e-13, atol=0)
    assert np.allclose(eR, st_.L[:, :, 1].sum(1), rtol=1e-13, atol=0)
    assert np.allclose(inner[1:], st_.L_hat[1:].sum(1), rtol=1e-13, atol=0)


def test_reflection_cases():
    W, case = ew.reflect_G((0, 1, 2), 2)
    assert case == 1 and W == (0, 1, 0)
    W, case = ew.reflect_G((0, 2), 2)
    assert case == 2 and W[-1] == 0 and len(W) == 4
    assert ew.path_length(W) == ew.path_length((0, 2))
    with pytest.raises(NotImplementedError):
        ew.reflect_G((0, 3), 3)


def test_split_points():
    V = (0, 1, 3, 2, 4)
    s, s2 = ew.split_points(V, 4)
    assert (s, s2) == (1, 4)
    with pytest.raises(NotImplementedError):
        ew.fold_H((0, 3), 6, 3)


def test_lambda_double_star_below_critical():
    lds = ew.lambda_double_star_estimate()
    assert lds < ew.lambda_hat_solve()
    assert ew.lambda_hat_solve() - lds < 1e-3
