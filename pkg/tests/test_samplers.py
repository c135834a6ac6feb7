import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from prudent_walk import enumeration_oracle as eo
from prudent_walk import samplers as S
from prudent_walk.errors import DomainError, RejectionStall
from prudent_walk.lattice_core import (
    LatticePath,
    decompose_general,
    decompose_two_sided,
    is_prudent,
    is_reduced,
    is_two_sided_plus,
)
from prudent_walk.scaling_analysis import normalized_weights


def test_streams_reproducible_and_distinct():
    a = S.make_stream(7, 1, 3).random(4)
    assert np.array_equal(a, S.make_stream(7, 1, 3).random(4))
    assert not np.array_equal(a, S.make_stream(7, 1, 4).random(4))
    assert not np.array_equal(a, S.make_stream(7, 2, 3).random(4))
    with pytest.raises(DomainError):
        S.make_stream(-1)


@settings(max_examples=50, deadline=None)
@given(st.text(alphabet="ENWS", max_size=30))
def test_codes_roundtrip(s):
    assert S.steps_to_string(S.string_to_codes(s)) == s


@pytest.mark.parametrize("L", range(1, 8))
def test_kinetic_law_normalised(L):
    fam = [LatticePath(s) for s in eo.iter_prudent(L)]
    assert math.fsum(S.kinetic_probability(p) for p in fam) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("L", range(2, 8))
def test_kinetic_closed_form_with_counts_sums_to_two_ninths(L):
    # range height/width read as visited row/column counts undercounts the mass
    fam = [LatticePath(s) for s in eo.iter_prudent(L)]
    assert math.fsum(S.kinetic_formula_literal(p) for p in fam) == pytest.approx(2 / 9, abs=1e-12)


def test_kinetic_probability_matches_step_by_step_choices():
    from prudent_walk.lattice_core import admissible_steps

    for s in eo.iter_prudent(6):
        p = 1.0
        for i in range(len(s)):
            p /= len(admissible_steps(LatticePath(s[:i])))
        assert S.kinetic_probability(LatticePath(s)) == pytest.approx(p, rel=1e-14)


def test_kinetic_sampler_chi2():
    L, n = 4, 30_000
    fam = list(eo.iter_prudent(L))
    probs = np.array([S.kinetic_probability(LatticePath(s)) for s in fam])
    rng = np.random.default_rng(3)
    c = Counter(S.sample_kinetic(L, rng).steps for _ in range(n))
    assert set(c) <= set(fam)
    obs = np.array([c[s] for s in fam])
    assert chisquare(obs, probs * n).pvalue > 1e-3


def test_two_sided_sampler_chi2():
    L, n = 6, 20_000
    fam = list(eo.iter_two_sided_plus(L))
    c = Counter(S.sample_two_sided_uniform(L, S.make_stream(5, 0, j)).steps for j in range(n))
    assert set(c) <= set(fam)
    obs = np.array([c[s] for s in fam])
    assert chisquare(obs).pvalue > 1e-3


def test_two_sided_lengths_and_shape():
    rng = np.random.default_rng(8)
    for L in (1, 17, 300):
        path, TN = S.sample_two_sided_uniform(L, rng, with_lengths=True)
        assert path.L == L and is_two_sided_plus(path) and is_prudent(path)
        assert TN[:, 0].sum() == L
        assert [e.T for e in decompose_two_sided(path)] == TN[:, 0].tolist()
        assert [e.N for e in decompose_two_sided(path)] == TN[:, 1].tolist()


def test_two_sided_stall():
    with pytest.raises(RejectionStall):
        for j in range(50):
            S.sample_two_sided_uniform(2000, S.make_stream(1, 0, j), max_restarts=0)


def test_build_lattice_examples():
    assert S.build_lattice_from_excursions([(0, 1, 0)]).steps == "ESEN"
    assert S.build_lattice_from_excursions([(0, 1, 0)], "flipped").steps == "ENES"
    assert S.build_lattice_from_excursions([(0, 0), (0, 2, 0)]).steps == "ENWWNEE"
    with pytest.raises(DomainError):
        S.build_lattice_from_excursions([(1, 0)])
    with pytest.raises(DomainError):
        S.build_lattice_from_excursions([(0, 0)], "sideways")


def test_build_lattice_inverts_two_sided_decomposition():
    for L in range(1, 10):
        for s in eo.iter_two_sided_plus(L):
            ex = decompose_two_sided(LatticePath(s))
            assert S.build_lattice_from_excursions([e.values for e in ex]).steps == s


@pytest.mark.parametrize("L", [1, 2, 7, 60])
def test_is_paths_are_reduced_and_records_agree(L):
    sm = S.ISSampler(L)
    for j in range(200):
        wp = sm.draw(S.make_stream(2, 0, j))
        assert wp.path.L == L and is_prudent(wp.path) and is_reduced(wp.path)
        assert wp.weight > 0 and wp.weight == pytest.approx(math.exp(wp.log_weight))
        d = decompose_general(wp.path)
        assert [r.T for r in d.records] == wp.records[:, 0].tolist()
        assert [r.eps for r in d.records] == wp.records[:, 2].tolist()
        assert d.tail_length == wp.tail_length


def test_is_deterministic_per_stream():
    a = S.sample_uniform_is(50, S.make_stream(9, 0, 1))
    b = S.sample_uniform_is(50, S.make_stream(9, 0, 1))
    assert a.path == b.path and a.log_weight == b.log_weight


def test_is_endpoint_law_small():
    L, n = 6, 20_000
    fam = list(eo.iter_prudent(L, reduced=True))
    exact = Counter(LatticePath(s).endpoint for s in fam)
    sm = S.ISSampler(L)
    lw, ends = np.empty(n), []
    for j in range(n):
        _, _, lw[j] = sm.draw_raw(S.make_stream(4, 0, j))
        ends.append(S.steps_to_string(sm.steps))
    p = normalized_weights(lw, n)
    pts = [LatticePath(s).endpoint for s in ends]
    for k, cnt in exact.items():
        f = np.array([e == k for e in pts], dtype=float)
        target = cnt / len(fam)
        se = math.sqrt(float(np.sum(p * p * (f - target) ** 2)))
        assert abs(float(p @ f) - target) <= 4 * se + 1e-12


def test_uniform_exact_sampler():
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = S.sample_uniform_exact(5, rng)
        assert p.L == 5 and is_prudent(p)


def test_domain_errors():
    with pytest.raises(DomainError):
        S.sample_kinetic(0, np.random.default_rng())
    with pytest.raises(DomainError):
        S.ISSampler(0)
