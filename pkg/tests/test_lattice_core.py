import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prudent_walk.enumeration_oracle import iter_prudent, iter_two_sided_plus
from prudent_walk.errors import DomainError, PreconditionError
from prudent_walk.lattice_core import (
    LatticePath,
    Step,
    admissible_steps,
    assemble_general,
    decompose_general,
    decompose_two_sided,
    is_prudent,
    is_reduced,
    is_two_sided_plus,
    quadrant_statistic,
    range_dims,
    rescale_path,
)


def P(s):
    return LatticePath(s)


def test_step_values():
    assert [s.name for s in Step] == ["E", "N", "W", "S"]
    assert Step.E.value == (1, 0) and Step.S.value == (0, -1)


def test_vertices_and_box():
    p = P("ENWW")
    assert p.vertices.tolist() == [[0, 0], [1, 0], [1, 1], [0, 1], [-1, 1]]
    assert p.endpoint == (-1, 1)
    assert p.bounding_box() == (-1, 1, 0, 1)
    assert p.bounding_box(1) == (0, 1, 0, 0)
    assert len(p.vertices) == p.L + 1


def test_bad_symbols():
    with pytest.raises(DomainError):
        P("EX")


def test_csv_roundtrip():
    p = P("ENWWSSEEE")
    assert LatticePath.from_csv(p.to_csv()) == p
    assert p.to_csv().splitlines()[0] == "i,x,y"


@pytest.mark.parametrize("steps,expected", [
    ("EN", True), ("EW", False), ("ENW", True), ("ENWS", False), ("ENWWSE", False), ("ENWWSS", True),
])
def test_is_prudent_examples(steps, expected):
    assert is_prudent(P(steps)) is expected


def test_prudent_matches_bruteforce_definition():
    def brute(steps):
        v = P(steps).vertices
        seen = {tuple(v[0])}
        for i, s in enumerate(steps):
            x, y = v[i]
            dx, dy = {"E": (1, 0), "N": (0, 1), "W": (-1, 0), "S": (0, -1)}[s]
            for k in range(1, len(steps) + 2):
                if (x + k * dx, y + k * dy) in seen:
                    return False
            seen.add(tuple(v[i + 1]))
        return True

    for L in range(1, 7):
        fam = set(iter_prudent(L))
        for combo in itertools.product("ENWS", repeat=L):
            s = "".join(combo)
            assert (s in fam) == brute(s)
            assert is_prudent(P(s)) == brute(s)


def test_admissible_counts():
    assert admissible_steps(P("")) == list("ENWS")
    assert len(admissible_steps(P("E"))) == 3
    # after a range-growing step three choices, otherwise two
    assert len(admissible_steps(P("EN"))) == 3
    assert len(admissible_steps(P("ENW"))) == 2


@pytest.mark.parametrize("steps,expected", [("E", True), ("ES", False), ("N", False), ("EN", True)])
def test_two_sided_examples(steps, expected):
    assert is_two_sided_plus(P(steps)) is expected


def test_rescale():
    assert rescale_path(P("EE"), [1.0]).values.tolist() == [[1.0, 0.0]]
    assert rescale_path(P("EE"), [0.25]).values.tolist() == [[0.25, 0.0]]
    assert rescale_path(P("EN"), [0.75]).values.tolist() == [[0.5, 0.25]]
    with pytest.raises(DomainError):
        rescale_path(P("EN"), [1.5])


def test_range_dims():
    assert range_dims(P("EE"), 2) == (3, 1)
    assert range_dims(P("ENW"), 3) == (2, 2)
    assert range_dims(P("ENW"), 0) == (1, 1)
    with pytest.raises(DomainError):
        range_dims(P("EN"), 3)


def test_quadrant_statistic():
    assert quadrant_statistic(P("EN")) == 1
    assert quadrant_statistic(P("EE")) == 0
    assert quadrant_statistic(P("ENNWW")) == 2


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=10 ** 6))
def test_quadrant_rotation_equivariance(L, idx):
    fam = list(iter_prudent(L))
    p = P(fam[idx % len(fam)])
    s = quadrant_statistic(p)
    r = quadrant_statistic(p.rotate(1))
    assert r == (0 if s == 0 else s % 4 + 1)


def test_two_sided_decomposition_examples():
    ex = decompose_two_sided(P("EEE"))
    assert [(e.kind, e.start, e.end) for e in ex] == [("H", 0, 3)]
    ex = decompose_two_sided(P("ENE"))
    assert [(e.kind, e.start, e.end) for e in ex] == [("H", 0, 1), ("V", 1, 2), ("H", 2, 3)]
    with pytest.raises(PreconditionError):
        decompose_two_sided(P("N"))


def test_two_sided_partition_and_values():
    for L in range(1, 11):
        for s in iter_two_sided_plus(L):
            ex = decompose_two_sided(P(s))
            assert "".join(e.steps for e in ex) == s
            for e in ex:
                assert e.values[0] == 0 and e.values[-1] == 0 and min(e.values) >= 0
                assert e.T == e.N + sum(abs(b - a) for a, b in zip(e.values[:-1], e.values[1:]))


def test_general_decomposition_bookkeeping():
    for L in range(1, 11):
        for s in iter_prudent(L, reduced=True):
            d = decompose_general(P(s))
            assert sum(r.T for r in d.records) + d.tail_length == L
            assert d.records[0].eps == 1
            for i, R in enumerate(d.R_sequence, start=1):
                assert R >= (i - 1) / 2


def test_general_decomposition_refines_two_sided():
    # every two-sided boundary is also a general boundary
    for L in range(1, 11):
        for s in iter_two_sided_plus(L):
            if not is_reduced(P(s)):
                continue
            two = {e.end for e in decompose_two_sided(P(s))[:-1]}
            gen = set(decompose_general(P(s)).boundaries)
            assert two <= gen


def test_general_needs_reduced():
    with pytest.raises(PreconditionError):
        decompose_general(P("NE"))


def test_assemble_general_roundtrip():
    for L in range(1, 10):
        for s in iter_prudent(L, reduced=True):
            d = decompose_general(P(s))
            parts = [r.values for r in d.records]
            if d.tail is not None:
                parts.append(d.tail.values)
            assert assemble_general(parts).steps == s
