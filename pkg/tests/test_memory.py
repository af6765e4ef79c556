import numpy as np
import pytest

from gwn.core import DimensionError, ParamStore, Tensor, finite_diff_check, sum_squares
from gwn.memory import LstmState, init_memory, lstm_step, memory_dims, run_memory


def mem_store(d=3, g=4, seed=0):
    store = ParamStore()
    init_memory(store, d, g, np.random.default_rng(seed))
    r = np.random.default_rng(seed + 1)
    for gate in "fioc":  # non-zero biases so every term is exercised
        store.set(f"memory.b{gate}", r.standard_normal(g) * 0.3)
    return store


def test_dims_and_zero_bias_init():
    store = ParamStore()
    init_memory(store, 5, 2, np.random.default_rng(0))
    assert memory_dims(store) == (5, 2)
    assert store["memory.Wf"].shape == (7, 2)
    np.testing.assert_array_equal(store["memory.bc"].data, np.zeros(2))


def test_single_step_hand_example():
    store = ParamStore()
    init_memory(store, 1, 1, np.random.default_rng(0))
    for gate in "fioc":
        store.set(f"memory.W{gate}", np.zeros((2, 1)))
    store.set("memory.bc", np.array([1.0]))
    st = lstm_step(Tensor([[0.0]]), LstmState.zeros(1, (1,)), store)
    c = 0.5 * np.tanh(1.0)
    assert st.c.data[0, 0] == pytest.approx(c, rel=1e-15)
    assert st.h.data[0, 0] == pytest.approx(0.5 * np.tanh(c), rel=1e-15)


def test_run_memory_equals_step_fold(rng):
    store = mem_store()
    x = rng.standard_normal((2, 6, 3))
    run = run_memory(Tensor(x), store)
    state = LstmState.zeros(4, (2,))
    for t in range(6):
        state = lstm_step(Tensor(x[:, t]), state, store)
        np.testing.assert_allclose(run.history[t].h.data, state.h.data, rtol=0, atol=1e-14)
    np.testing.assert_allclose(run.c.data, state.c.data, rtol=0, atol=1e-14)
    assert len(run.history) == 6


def test_prefix_property(rng):
    store = mem_store()
    x = rng.standard_normal((5, 3))
    full = run_memory(Tensor(x), store)
    part = run_memory(Tensor(x[:3]), store)
    np.testing.assert_array_equal(full.history[2].h.data, part.h.data)


def test_bounded_state(rng):
    store = mem_store()
    run = run_memory(Tensor(rng.standard_normal((20, 3)) * 10), store)
    assert (np.abs(run.h.data) < 1).all()


def test_gradients(rng):
    store = mem_store(d=2, g=3)
    x = Tensor(rng.standard_normal((2, 4, 2)))
    rep = finite_diff_check(lambda p: sum_squares(run_memory(x, p).h), store)
    assert rep.passed(1e-5), rep.max_rel_error


def test_errors():
    store = mem_store()
    with pytest.raises(DimensionError):
        run_memory(Tensor(np.zeros((4, 2))), store)
    with pytest.raises(ValueError):
        run_memory(Tensor(np.zeros((0, 3))), store)
    with pytest.raises(DimensionError):
        lstm_step(Tensor(np.zeros(3)), LstmState.zeros(2), store)
