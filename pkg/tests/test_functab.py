import math
import pickle

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rechcomp.functab import (
    EnumerationTooLarge,
    QuantizedFunction,
    constraint_pairs,
    enumerate_inputs,
    make_function,
)

from oracles import brute_pairs, brute_rows, brute_selection


def test_product_multiset_has_35_rows_with_known_outputs():
    enum = enumerate_inputs(make_function("prod", [1, 2, 3, 4], 4), "multiset")
    assert enum.M == 35
    for tup, out in [((1, 1, 2, 2), 4), ((1, 2, 3, 4), 24), ((3, 3, 4, 4), 144)]:
        i = enum.index_of([v - 1 for v in tup])
        assert enum.outputs[i] == out


def test_identity_full():
    enum = enumerate_inputs(make_function("sum", [0, 1], 1), "full")
    assert enum.M == 2
    np.testing.assert_array_equal(enum.selection, np.eye(2))
    np.testing.assert_array_equal(enum.outputs, [0, 1])


def test_two_node_sum_full():
    enum = enumerate_inputs(make_function("sum", [0, 1], 2), "full")
    np.testing.assert_array_equal(enum.outputs, [0, 1, 1, 2])
    np.testing.assert_array_equal(enum.selection, [[1, 0, 1, 0], [1, 0, 0, 1], [0, 1, 1, 0], [0, 1, 0, 1]])


def test_two_node_sum_pairs():
    enum = enumerate_inputs(make_function("sum", [0, 1], 2), "full")
    cons = constraint_pairs(enum, 1.0)
    assert len(cons) == 5
    assert (1, 2) not in [(i, j) for i, j, _ in cons.pairs]
    assert dict(((i, j), d) for i, j, d in cons.pairs)[(0, 3)] == 4


def test_constant_function_has_no_pairs():
    f = QuantizedFunction(((0.0, 1.0),) * 3, lambda v: 7.0, symmetric=True)
    assert len(constraint_pairs(enumerate_inputs(f), 0.5)) == 0


def test_qpsk_example_pair_delta():
    enum = enumerate_inputs(make_function("prod", [1, 2, 3, 4], 4), "multiset")
    cons = constraint_pairs(enum, 1e-2)
    i, j = sorted((enum.index_of([0, 0, 1, 1]), enum.index_of([0, 1, 2, 3])))
    pairs = {(a, b): d for a, b, d in cons.pairs}
    assert pairs[(i, j)] == pytest.approx(4.0, rel=1e-15)


def test_multiset_requires_symmetry():
    f = QuantizedFunction(((0.0, 1.0),) * 2, lambda v: v[0] - v[1])
    with pytest.raises(ValueError):
        enumerate_inputs(f, "multiset")


def test_size_guard():
    with pytest.raises(EnumerationTooLarge, match="cap"):
        enumerate_inputs(make_function("sum", range(10), 4), "full", max_rows=1000)


@pytest.mark.parametrize("bad", [[1, 1, 2], [3, 2, 1], [0]])
def test_domain_validation(bad):
    with pytest.raises(ValueError):
        make_function("sum", bad, 2)


def test_epsilon_must_be_positive():
    enum = enumerate_inputs(make_function("sum", [0, 1], 2))
    with pytest.raises(ValueError):
        constraint_pairs(enum, 0.0)


small = st.tuples(st.integers(1, 4), st.integers(2, 4), st.sampled_from(["sum", "prod", "max"]),
                  st.sampled_from(["full", "multiset"]))


@settings(max_examples=40, deadline=None)
@given(small)
def test_enumeration_matches_brute_force(params):
    k, q, kind, mode = params
    vals = list(range(q))
    enum = enumerate_inputs(make_function(kind, vals, k), mode)
    rows = brute_rows(q, k, mode == "multiset")
    assert [tuple(r) for r in enum.rows.tolist()] == rows
    np.testing.assert_array_equal(enum.selection, brute_selection(rows, q, k))
    expect = {"sum": sum, "prod": math.prod, "max": max}[kind]
    np.testing.assert_array_equal(enum.outputs, [float(expect(r)) for r in rows])
    assert enum.M == (q**k if mode == "full" else math.comb(q + k - 1, k))
    # row sums and one-hot node blocks
    assert np.all(enum.selection.sum(axis=1) == k)
    assert np.all(enum.selection.reshape(enum.M, k, q).sum(axis=2) == 1)


@settings(max_examples=40, deadline=None)
@given(small, st.floats(1e-6, 10))
def test_pairs_match_brute_force(params, eps):
    k, q, kind, mode = params
    enum = enumerate_inputs(make_function(kind, range(q), k), mode)
    cons = constraint_pairs(enum, eps)
    ref = brute_pairs(enum.outputs.tolist(), eps)
    assert [(i, j) for i, j, _ in cons.pairs] == [(i, j) for i, j, _ in ref]
    np.testing.assert_allclose(cons.delta, [d for *_, d in ref], rtol=1e-14)
    assert np.all(cons.delta > 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(2, 4), st.sampled_from(["sum", "prod", "max"]), st.randoms())
def test_permutation_consistency(k, q, kind, rnd):
    full = enumerate_inputs(make_function(kind, range(q), k), "full")
    multi = enumerate_inputs(make_function(kind, range(q), k), "multiset")
    for row, out in zip(full.rows.tolist(), full.outputs):
        perm = row[:]
        rnd.shuffle(perm)
        assert full.outputs[full.index_of(perm)] == out
        assert multi.outputs[multi.index_of(row)] == out
    assert len({tuple(sorted(r)) for r in full.rows.tolist()}) == multi.M


def test_enumeration_is_deterministic():
    f = make_function("prod", [1, 2, 3], 3)
    a, b = enumerate_inputs(f, "full"), enumerate_inputs(f, "full")
    assert pickle.dumps((a.rows, a.selection, a.outputs)) == pickle.dumps((b.rows, b.selection, b.outputs))
