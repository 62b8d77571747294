import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rechcomp.codesign.alternating import SolverConfig, alternate_minimize
from rechcomp.decoder import build_codebook, decode, decode_batch, indicator_decode, merge_unresolved
from rechcomp.functab import constraint_pairs, enumerate_inputs, make_function
from rechcomp.harness.table1 import design_vectors
from rechcomp.macsim import simulate


def _table1(eps=5e-5, mode="multiset"):
    enum = enumerate_inputs(make_function("prod", [1, 2, 3, 4], 4), mode)
    return enum, constraint_pairs(enum, eps)


def test_qpsk_example_entry():
    enum, _ = _table1()
    book = build_codebook(enum, *design_vectors())
    i = enum.index_of([0, 1, 2, 3])
    np.testing.assert_array_equal(book.v[i], [1 + 1j, -1 - 1j])
    assert book.outputs[i] == 24


def test_zero_vector_collapses_everything():
    enum, cons = _table1()
    book = build_codebook(enum, np.zeros(16), np.ones((16, 2)))
    assert not np.any(book.v)
    merged = merge_unresolved(book, cons)
    assert len(set(merged.group.tolist())) == 1
    assert merged.group_output[0] == pytest.approx(enum.outputs.mean())


def test_sum_design_has_three_points():
    enum = enumerate_inputs(make_function("sum", [0, 1], 2), "full")
    cons = constraint_pairs(enum, 0.1)
    res = alternate_minimize(enum, cons, SolverConfig(epsilon=0.1, p_max=4, L=1))
    book = build_codebook(enum, res.x, res.C)
    assert book.M == 4
    assert 3 <= len({complex(np.round(v[0], 6)) for v in book.v}) <= 4


def test_feasible_design_has_no_merges():
    enum, cons = _table1()
    book = build_codebook(enum, *design_vectors())
    merged = merge_unresolved(book, cons)
    np.testing.assert_array_equal(merged.group, book.group)


def test_uncoded_collision_merges_to_mean():
    enum, cons = _table1(1e-6)
    x, _ = design_vectors()
    book = merge_unresolved(build_codebook(enum, x, np.ones((16, 1), dtype=int)), cons)
    rows = [enum.index_of(t) for t in ([0, 0, 1, 1], [0, 1, 2, 3], [2, 2, 3, 3])]
    assert len({book.group[i] for i in rows}) == 1
    assert book.decoded_outputs[rows[0]] == pytest.approx((4 + 24 + 144) / 3)


def test_single_entry_codebook_unchanged():
    enum = enumerate_inputs(make_function("sum", [0, 1], 1))
    cons = constraint_pairs(enum, 1.0)
    book = build_codebook(enum, np.array([0, 1.0]), np.ones((2, 1)))
    sub = type(cons)(1.0, cons.first[:0], cons.second[:0], cons.delta[:0])
    assert merge_unresolved(book, sub) is book


def test_decode_examples():
    enum, _ = _table1()
    book = build_codebook(enum, *design_vectors())
    assert decode(np.array([2, -2]), book)[0] == 4
    for i in range(enum.M):
        assert decode(book.v[i], book)[0] == enum.outputs[i]


def test_ties_go_to_lowest_index():
    enum = enumerate_inputs(make_function("sum", [0, 1], 1))
    book = build_codebook(enum, np.array([-1.0, 1.0]), np.ones((2, 1)))
    assert decode(np.array([0.0]), book)[1] == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 34), st.floats(0, 0.499), st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
def test_small_perturbation_keeps_output(i, frac, a, b):
    enum, _ = _table1()
    book = build_codebook(enum, *design_vectors())
    r = frac * book.min_pair_distance
    d = r * np.array([np.cos(a) * np.exp(1j * b), np.sin(a) * np.exp(1j * (a + b))])
    assert decode(book.v[i] + d, book)[0] == enum.outputs[i]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_indicator_form_agrees_with_argmin(seed):
    rng = np.random.default_rng(seed)
    enum, _ = _table1()
    book = build_codebook(enum, *design_vectors())
    y = book.v[rng.integers(enum.M)] + 0.3 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
    assert indicator_decode(y, book) == decode(y, book)[0]


def test_noiseless_round_trip_on_every_tuple():
    enum, cons = _table1(3e-5)
    res = alternate_minimize(enum, cons, SolverConfig(epsilon=3e-5, L=2))
    assert res.feasible
    book = build_codebook(enum, res.x, res.C)
    full = enumerate_inputs(enum.func, "full")
    y = simulate(res.x, res.C, full.rows, 4)
    est, _ = decode_batch(y, book)
    np.testing.assert_array_equal(est, full.outputs)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(1e-4, 1e-1))
def test_merge_soundness(seed, eps):
    rng = np.random.default_rng(seed)
    enum = enumerate_inputs(make_function("sum", [0, 1, 2], 3), "multiset")
    cons = constraint_pairs(enum, eps)
    x = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    book = merge_unresolved(build_codebook(enum, x, rng.integers(0, 2, size=(9, 2))), cons)
    d2 = np.sum(np.abs(book.v[cons.first] - book.v[cons.second]) ** 2, axis=1)
    cross = (book.group[cons.first] != book.group[cons.second]) & (
        book.decoded_outputs[cons.first] != book.decoded_outputs[cons.second])
    assert np.all(d2[cross] >= cons.delta[cross] * (1 - 1e-6))
    # merged outputs are member means
    for g in np.unique(book.group):
        members = book.group == g
        assert book.group_output[g] == pytest.approx(book.outputs[members].mean())


def test_decode_checks_length():
    enum, _ = _table1()
    book = build_codebook(enum, *design_vectors())
    with pytest.raises(ValueError):
        decode_batch(np.zeros((3, 3)), book)
