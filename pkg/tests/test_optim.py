import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eisp.autodiff import Param
from eisp.optim import AdamState, adam_step, adam_state_arrays, load_adam_state

from oracles import adam_reference


def test_zero_gradient_is_fixed_point():
    p = Param(np.array([1.0, -2.0, 3.0]), "p")
    before = p.value.copy()
    adam_step([p], {"p": np.zeros(3)}, AdamState(), lr=1e-2)
    np.testing.assert_array_equal(p.value, before)


def test_first_step_magnitude_is_lr_times_sign():
    # with zero moments, one step moves by lr * g/(|g| + eps') ~= lr * sign(g)
    p = Param(np.array([0.0]), "p")
    adam_step([p], {"p": np.array([0.3])}, AdamState(), lr=1e-3)
    assert p.value[0] == pytest.approx(-1e-3, rel=1e-4)


def test_two_constant_steps_match_unrolled_oracle():
    g = np.array([0.7, -1.2])
    p = Param(np.array([0.5, 0.5]), "p")
    st8 = AdamState()
    adam_step([p], {"p": g}, st8, lr=1e-2)
    adam_step([p], {"p": g}, st8, lr=1e-2)
    expected = adam_reference(np.array([0.5, 0.5]), [g, g], lr=1e-2)
    np.testing.assert_allclose(p.value, expected, rtol=0, atol=1e-12)
    assert st8.step_count == 2


def test_many_steps_match_unrolled_oracle(rng):
    p = Param(rng.standard_normal((3, 2)), "w")
    x0 = p.value.copy()
    gs = [rng.standard_normal((3, 2)) for _ in range(7)]
    state = AdamState()
    for g in gs:
        adam_step([p], {"w": g}, state, lr=3e-4)
    np.testing.assert_allclose(p.value, adam_reference(x0, gs, lr=3e-4), atol=1e-12)


def test_nan_grad_rejected_atomically_with_name():
    p = Param(np.array([1.0]), "p")
    q = Param(np.array([2.0]), "alpha.w3")
    state = AdamState()
    adam_step([p, q], {"p": np.array([0.1]), "alpha.w3": np.array([0.1])}, state, lr=1e-2)
    snap_p, snap_q = p.value.copy(), q.value.copy()
    with pytest.raises(FloatingPointError, match="alpha.w3"):
        adam_step(
            [p, q],
            {"p": np.array([0.1]), "alpha.w3": np.array([np.nan])},
            state,
            lr=1e-2,
        )
    np.testing.assert_array_equal(p.value, snap_p)
    np.testing.assert_array_equal(q.value, snap_q)
    assert state.step_count == 1


def test_shape_mismatch_rejected():
    p = Param(np.zeros((2, 2)), "p")
    with pytest.raises(ValueError):
        adam_step([p], {"p": np.zeros(3)}, AdamState(), lr=1e-3)


def test_negative_lr_rejected():
    p = Param(np.zeros(1), "p")
    with pytest.raises(ValueError):
        adam_step([p], {"p": np.ones(1)}, AdamState(), lr=-1e-3)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_lr_zero_is_identity(seed):
    rng = np.random.default_rng(seed)
    p = Param(rng.standard_normal(4), "p")
    before = p.value.copy()
    state = AdamState()
    adam_step([p], {"p": rng.standard_normal(4)}, state, lr=0.0)
    np.testing.assert_array_equal(p.value, before)
    assert state.step_count == 1


def test_state_round_trip():
    p = Param(np.array([1.0, 2.0]), "p")
    state = AdamState()
    adam_step([p], {"p": np.array([0.5, -0.5])}, state, lr=1e-3)
    arrays = adam_state_arrays(state)
    restored = AdamState()
    load_adam_state(restored, arrays)
    assert restored.step_count == state.step_count
    np.testing.assert_array_equal(restored.first_moment["p"], state.first_moment["p"])
    np.testing.assert_array_equal(restored.second_moment["p"], state.second_moment["p"])
