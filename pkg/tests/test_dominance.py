import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from drsa.dominance import (
    ClassUnion,
    UnionKind,
    analysis_unions,
    approximate,
    dominance_matrix,
    dominated_set,
    dominates,
    dominating_set,
    downward_union,
    lower_approximation,
    quality_gamma,
    upper_approximation,
    upward_union,
)
from drsa.table import COST, TableError, make_table

# Dominating (positive cone) and dominated (negative cone) sets of the example.
CONES = {
    "1": ({"1"}, {"1", "2", "7"}),
    "2": ({"1", "2"}, {"2"}),
    "3": ({"3"}, {"3", "7"}),
    "4": ({"4", "5"}, {"4"}),
    "5": ({"5"}, {"4", "5", "8", "9", "10"}),
    "6": ({"6"}, {"6"}),
    "7": ({"1", "3", "7"}, {"7"}),
    "8": ({"5", "8"}, {"8"}),
    "9": ({"5", "9"}, {"9"}),
    "10": ({"5", "10"}, {"10"}),
}


@pytest.mark.parametrize("oid", list(CONES))
def test_example_cones(example, oid):
    up, down = CONES[oid]
    assert dominating_set(example, oid) == up
    assert dominated_set(example, oid) == down


def test_dominance_reflexive_and_matrix(example):
    m = dominance_matrix(example)
    assert m.diagonal().all()
    for i, x in enumerate(example.observations):
        for j, y in enumerate(example.observations):
            assert m[i, j] == dominates(x, y, example.criteria)


def test_example_unions(example):
    assert downward_union(example, "1").members == {"7", "9", "10"}
    assert downward_union(example, "2").members == {"2", "3", "6", "7", "8", "9", "10"}
    assert upward_union(example, "2").members == {"1", "2", "3", "4", "5", "6", "8"}
    assert upward_union(example, "3").members == {"1", "4", "5"}
    assert [str(u) for u in analysis_unions(example)] == [
        "at most 1",
        "at most 2",
        "at least 2",
        "at least 3",
    ]


def test_example_is_consistent(example):
    for u in analysis_unions(example):
        a = approximate(example, u)
        assert a.lower == u.members == a.upper
        assert not a.boundary
    assert quality_gamma(example) == 1.0


def test_unknown_class(example):
    with pytest.raises(TableError):
        upward_union(example, "T9")


def test_foreign_union_rejected(example):
    fake = ClassUnion(UnionKind.AT_LEAST, "2", frozenset({"1"}))
    with pytest.raises(TableError):
        lower_approximation(example, fake)


def test_inconsistent_pair():
    # B dominates A but has the lower class.
    t = make_table(["c"], ["1", "2"], [[1], [2]], ["2", "1"], ids=["A", "B"])
    up = upward_union(t, "2")
    assert lower_approximation(t, up) == frozenset()
    assert upper_approximation(t, up) == {"A", "B"}
    assert quality_gamma(t) == 0.0


def test_cost_criterion_reverses_dominance():
    t = make_table(["price"], ["1", "2"], [[10], [20]], ["2", "1"], directions=[COST])
    assert dominating_set(t, "2") == {"1", "2"}
    assert quality_gamma(t) == 1.0


tables = st.integers(1, 8).flatmap(
    lambda n: st.tuples(
        st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=n, max_size=n),
        st.lists(st.integers(0, 2), min_size=n, max_size=n),
    )
)


@settings(max_examples=150, deadline=None)
@given(tables)
def test_approximations_match_oracle(data):
    rows, ranks = data
    t = make_table(["a", "b"], ["1", "2", "3"], rows, [str(r + 1) for r in ranks])
    for i in range(len(rows)):
        assert dominating_set(t, str(i + 1)) == {str(j + 1) for j in oracles.positive_cone(rows, i)}
        assert dominated_set(t, str(i + 1)) == {str(j + 1) for j in oracles.negative_cone(rows, i)}
    for u in analysis_unions(t):
        kind, th = u.kind.value, int(u.threshold) - 1
        a = approximate(t, u)
        assert a.lower == {str(j + 1) for j in oracles.lower(rows, ranks, kind, th)}
        assert a.upper == {str(j + 1) for j in oracles.upper(rows, ranks, kind, th)}
        assert a.lower <= u.members <= a.upper
    assert quality_gamma(t) == pytest.approx(oracles.quality(rows, ranks, 3))


@settings(max_examples=50, deadline=None)
@given(tables)
def test_complement_duality(data):
    rows, ranks = data
    t = make_table(["a", "b"], ["1", "2", "3"], rows, [str(r + 1) for r in ranks])
    everyone = frozenset(t.ids)
    for c_up, c_down in (("2", "1"), ("3", "2")):
        up, down = upward_union(t, c_up), downward_union(t, c_down)
        assert upper_approximation(t, up) == everyone - lower_approximation(t, down)
        assert upper_approximation(t, down) == everyone - lower_approximation(t, up)


def test_large_table_is_fast():
    rng = np.random.default_rng(0)
    n = 3000
    rows = rng.integers(0, 50, size=(n, 5)).tolist()
    ranks = rng.integers(0, 4, size=n)
    t = make_table([f"C{i}" for i in range(5)], ["1", "2", "3", "4"], rows, [str(r + 1) for r in ranks])
    assert 0.0 <= quality_gamma(t) <= 1.0
