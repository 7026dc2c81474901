import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from goformer.tensor import (
    AdamState,
    CosineSchedule,
    Tape,
    Tensor,
    adam_step,
    cosine_lr,
    load_weights,
    ops,
    save_weights,
)

from gradcheck import OP_NAMES, TOLERANCE, check_op, op_case
from oracles import avg_pool_reference, conv2d_reference, matmul_reference


@pytest.mark.parametrize("name", OP_NAMES)
def test_op_gradient_matches_finite_difference(name):
    for seed in range(3):
        assert check_op(name, seed) < TOLERANCE, (name, seed)


def test_key_bias_gradient_is_zero():
    # softmax is shift invariant along the key axis, so bk cannot move the output
    fn, arrays, rng = op_case("mhsa", 4)
    tensors = [Tensor(np.asarray(a, dtype=np.float64), requires_grad=True) for a in arrays]
    with Tape() as tape:
        loss = ops.sum_all(ops.mul(fn(*tensors), Tensor(rng.standard_normal((2, 5, 4)))))
    tape.backward(loss)
    assert np.abs(tensors[7].grad).max() < 1e-12
    assert np.abs(tensors[6].grad).max() > 1e-3


@pytest.mark.parametrize("k", [1, 3])
def test_conv_forward_matches_loops(k):
    rng = np.random.default_rng(k)
    x = rng.standard_normal((2, 3, 5, 4))
    w = rng.standard_normal((4, 3, k, k))
    b = rng.standard_normal(4)
    out = ops.conv2d_same(Tensor(x), Tensor(w), Tensor(b)).data
    np.testing.assert_allclose(out, conv2d_reference(x, w, b), rtol=1e-10, atol=1e-10)


def test_conv_inference_chunking_matches_single_pass():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((70, 2, 4, 4))
    w = rng.standard_normal((3, 2, 3, 3))
    full = ops.conv2d_same(Tensor(x), Tensor(w)).data
    parts = np.concatenate([ops.conv2d_same(Tensor(x[i : i + 1]), Tensor(w)).data for i in range(70)])
    np.testing.assert_allclose(full, parts, rtol=1e-12)


def test_avg_pool_divides_by_in_bounds_taps():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((1, 2, 4, 3))
    np.testing.assert_allclose(ops.avg_pool3x3_same(Tensor(x)).data, avg_pool_reference(x), rtol=1e-12)
    ones = ops.avg_pool3x3_same(Tensor(np.ones((1, 1, 19, 19)))).data
    np.testing.assert_allclose(ones, 1.0)


def test_matmul_matches_loops():
    rng = np.random.default_rng(2)
    a, b = rng.standard_normal((4, 3)), rng.standard_normal((3, 5))
    np.testing.assert_allclose(ops.matmul(Tensor(a), Tensor(b)).data, matmul_reference(a, b), rtol=1e-12)


def test_gelu_uses_tanh_form():
    x = np.linspace(-4, 4, 17)
    expected = 0.5 * x * (1 + np.tanh(math.sqrt(2 / math.pi) * (x + 0.044715 * x**3)))
    np.testing.assert_allclose(ops.gelu(Tensor(x)).data, expected, rtol=1e-12)


def test_batch_norm_running_stats_use_unbiased_variance():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((4, 2, 3, 3))
    mean, var = np.zeros(2), np.ones(2)
    ops.batch_norm(Tensor(x), Tensor(np.ones(2)), Tensor(np.zeros(2)), mean, var, training=True)
    np.testing.assert_allclose(mean, 0.1 * x.mean(axis=(0, 2, 3)))
    np.testing.assert_allclose(var, 0.9 + 0.1 * x.var(axis=(0, 2, 3), ddof=1))


def test_no_recording_outside_tape():
    w = Tensor(np.ones((2, 2)), requires_grad=True)
    out = ops.matmul(w, w)
    assert out.is_leaf and not out.requires_grad


def test_gradients_accumulate_over_reuse():
    x = Tensor(np.array([2.0, -1.0]), requires_grad=True)
    with Tape() as tape:
        loss = ops.sum_all(ops.mul(x, x))
    tape.backward(loss)
    np.testing.assert_allclose(x.grad, [4.0, -2.0])


def test_backward_needs_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        y = ops.mul(x, 2.0)
    with pytest.raises(ValueError):
        tape.backward(y)


def test_cosine_endpoints_exact():
    sched = CosineSchedule(2e-3, 1e-5, 500)
    assert cosine_lr(0, sched) == 2e-3
    assert cosine_lr(500, sched) == 1e-5
    assert cosine_lr(900, sched) == 1e-5
    assert cosine_lr(250, sched) == pytest.approx((2e-3 + 1e-5) / 2)


@settings(max_examples=50, deadline=None)
@given(t=st.integers(0, 999), total=st.integers(1, 1000))
def test_cosine_is_monotone_and_bounded(t, total):
    sched = CosineSchedule(1.0, 0.1, total)
    lr = cosine_lr(t, sched)
    assert 0.1 <= lr <= 1.0
    assert cosine_lr(t + 1, sched) <= lr


def test_schedule_rejects_bad_bounds():
    with pytest.raises(ValueError):
        CosineSchedule(1e-3, 2e-3, 10)
    with pytest.raises(ValueError):
        CosineSchedule(1e-3, 0.0, 0)


def test_adam_first_step_moves_by_lr():
    # bias correction makes the first update lr * sign(g) up to eps
    p = Tensor(np.array([1.0, -2.0, 0.5]), requires_grad=True)
    p.grad = np.array([0.3, -4.0, 1e-3])
    adam_step([p], AdamState(), 0.01)
    np.testing.assert_allclose(p.data, [0.99, -1.99, 0.49], rtol=1e-6)


def test_adam_matches_hand_recurrence():
    rng = np.random.default_rng(5)
    p = Tensor(rng.standard_normal(4), requires_grad=True)
    ref = p.data.copy()
    m = np.zeros(4)
    v = np.zeros(4)
    state = AdamState()
    for t in range(1, 6):
        g = rng.standard_normal(4)
        p.grad = g
        adam_step([p], state, 1e-2)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        ref -= 1e-2 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
    np.testing.assert_allclose(p.data, ref, rtol=1e-12)


def test_adam_zero_lr_leaves_parameters():
    p = Tensor(np.ones(3), requires_grad=True)
    p.grad = np.ones(3)
    adam_step([p], AdamState(), 0.0)
    np.testing.assert_array_equal(p.data, np.ones(3))


def test_weight_file_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    arrays = {"a.weight": rng.standard_normal((3, 2, 3, 3)).astype(np.float32), "b": np.arange(4, dtype=np.float32)}
    save_weights(tmp_path / "w.gowt", "res:1x2", arrays)
    descriptor, back = load_weights(tmp_path / "w.gowt")
    assert descriptor == "res:1x2"
    assert list(back) == list(arrays)
    for k in arrays:
        assert back[k].tobytes() == arrays[k].tobytes()


def test_weight_file_rejects_garbage(tmp_path):
    (tmp_path / "bad").write_bytes(b"NOPE" + bytes(8))
    with pytest.raises(ValueError):
        load_weights(tmp_path / "bad")
    save_weights(tmp_path / "t.gowt", "x", {"w": np.ones(10, np.float32)})
    raw = (tmp_path / "t.gowt").read_bytes()
    (tmp_path / "t.gowt").write_bytes(raw[:-4])
    with pytest.raises(ValueError):
        load_weights(tmp_path / "t.gowt")
