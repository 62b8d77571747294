import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rechcomp.codesign.alternating import SlotCountTooSmall, SolverConfig, alternate_minimize, initial_code
from rechcomp.codesign.problem import check_feasibility, lmin_bound, received_sequences
from rechcomp.functab import ConstraintSet, constraint_pairs, enumerate_inputs, make_function


def _setup(kind, values, k, eps, mode="full"):
    enum = enumerate_inputs(make_function(kind, values, k), mode)
    return enum, constraint_pairs(enum, eps)


@pytest.mark.parametrize("mode", ["full", "multiset"])
def test_two_node_sum_design(mode):
    enum, cons = _setup("sum", [0, 1], 2, 0.1, mode)
    res = alternate_minimize(enum, cons, SolverConfig(epsilon=0.1, p_max=4, L=1))
    assert res.feasible
    V = received_sequences(enum, res.x, res.C)
    full = enumerate_inputs(make_function("sum", [0, 1], 2), "full")
    Vf = received_sequences(full, res.x, res.C)
    assert len({complex(np.round(v[0], 6)) for v in Vf}) == 3
    assert len(V) == enum.M
    # the energy-optimal separation of outputs 0 and 2 by sqrt(0.4)
    assert res.energy == pytest.approx(0.1, rel=1e-5)


def test_empty_constraints_converge_immediately():
    enum = enumerate_inputs(make_function("sum", [0, 1], 2))
    cons = ConstraintSet(0.1, np.zeros(0, int), np.zeros(0, int), np.zeros(0))
    res = alternate_minimize(enum, cons, SolverConfig(epsilon=0.1, L=2))
    assert res.iterations_used == 1 and res.feasible
    assert not np.any(res.x) and not np.any(res.C)


def test_qpsk_example_regime_design_is_feasible():
    enum, cons = _setup("prod", [1, 2, 3, 4], 4, 3e-5, "multiset")
    res = alternate_minimize(enum, cons, SolverConfig(epsilon=3e-5, L=2))
    assert res.feasible
    assert res.energy <= 16 * (1 + 1e-6)
    margins, ok = check_feasibility(res.x, res.C, enum, cons)
    assert ok and np.all(margins >= -1e-6 * np.maximum(1, cons.delta))


def test_gate_refuses_with_diagnostic():
    enum, cons = _setup("prod", [1, 2, 3, 4], 4, 1e-2, "multiset")
    with pytest.raises(SlotCountTooSmall, match="L_min=651"):
        alternate_minimize(enum, cons, SolverConfig(epsilon=1e-2, L=2))


def test_gate_accepts_boundary():
    enum, cons = _setup("prod", [1, 2, 3, 4], 4, 1e-4, "multiset")
    l_min = lmin_bound(cons, enum.N, 16.0)
    assert l_min == 7
    with pytest.raises(SlotCountTooSmall):
        alternate_minimize(enum, cons, SolverConfig(epsilon=1e-4, L=l_min - 1, max_outer_iters=1))
    res = alternate_minimize(enum, cons, SolverConfig(epsilon=1e-4, L=l_min, max_outer_iters=1))
    assert res.L == l_min


def test_design_is_deterministic():
    enum, cons = _setup("prod", [0, 1, 2, 3], 4, 1e-4, "multiset")
    cfg = SolverConfig(epsilon=1e-4, L=2, seed=5)
    a, b = alternate_minimize(enum, cons, cfg), alternate_minimize(enum, cons, cfg)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.C, b.C)
    assert a.surrogate_trace == b.surrogate_trace


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(["sum", "prod", "max"]), st.integers(2, 3), st.integers(1, 3),
       st.sampled_from(["bit-split", "all-ones"]), st.integers(0, 1000))
def test_surrogate_is_non_increasing(kind, q, L, init, seed):
    enum, cons = _setup(kind, range(1, q + 1), 2, 1e-2, "multiset")
    if len(cons) == 0:
        return
    cfg = SolverConfig(epsilon=1e-2, L=L, init_strategy=init, seed=seed, exhaustive_threshold=24)
    try:
        res = alternate_minimize(enum, cons, cfg)
    except SlotCountTooSmall:
        return
    trace = res.surrogate_trace
    assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))
    if res.feasible:
        assert check_feasibility(res.x, res.C, enum, cons)[1]


def test_initial_codes():
    np.testing.assert_array_equal(initial_code("all-ones", 3, 2), np.ones((3, 2)))
    np.testing.assert_array_equal(initial_code("bit-split", 3, 2), [[1, 0], [0, 1], [1, 0]])
    with pytest.raises(ValueError):
        SolverConfig(init_strategy="random")
    with pytest.raises(ValueError):
        SolverConfig(L=0)
