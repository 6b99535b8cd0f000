import numpy as np
import pytest

from neurowave import autodiff as ad
from neurowave.autodiff import Tensor

RNG = np.random.default_rng(0)


def numeric_grads(fn, arrays, h=1e-6):
    """Central finite differences of sum(fn(arrays)) w.r.t. every input entry."""
    grads = []
    for target in arrays:
        g = np.zeros_like(target)
        flat = target.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = float(ad.tensor_sum(fn(*[Tensor(a) for a in arrays])).data)
            flat[i] = orig - h
            down = float(ad.tensor_sum(fn(*[Tensor(a) for a in arrays])).data)
            flat[i] = orig
            gflat[i] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def check_op(fn, *arrays, tol=5e-5):
    tensors = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    out = ad.tensor_sum(fn(*tensors))
    out.backward()
    numeric = numeric_grads(fn, [a.copy() for a in arrays])
    for t, num in zip(tensors, numeric):
        assert t.grad is not None
        scale = np.maximum(np.abs(num), 1.0)
        assert np.max(np.abs(t.grad - num) / scale) < tol


def test_add_broadcast_grad():
    check_op(ad.add, RNG.standard_normal((3, 4)), RNG.standard_normal((4,)))
    check_op(ad.add, RNG.standard_normal((2, 1, 4)), RNG.standard_normal((2, 3, 1)))


def test_mul_div_grad():
    check_op(ad.mul, RNG.standard_normal((3, 4)), RNG.standard_normal((3, 4)))
    check_op(ad.div, RNG.standard_normal((3, 4)), RNG.standard_normal((3, 4)) + 3.0)


def test_power_grads():
    x = np.abs(RNG.standard_normal((3, 3))) + 0.5
    check_op(lambda a: ad.power(a, 2), x.copy())
    check_op(lambda a: ad.power(a, 0.5), x.copy())
    check_op(lambda a: ad.power(a, 3), x.copy())
    check_op(lambda a: ad.power(a, -1.3), x.copy())


def test_matmul_grad_batched():
    check_op(ad.matmul, RNG.standard_normal((3, 4)), RNG.standard_normal((4, 2)))
    check_op(ad.matmul, RNG.standard_normal((2, 5, 3, 4)), RNG.standard_normal((2, 5, 4, 3)))
    # broadcast over batch dims
    check_op(ad.matmul, RNG.standard_normal((5, 3, 4)), RNG.standard_normal((4, 3)))
    with pytest.raises(ValueError):
        ad.matmul(Tensor(np.zeros(3)), Tensor(np.zeros((3, 2))))


def test_elementwise_grads():
    x = RNG.standard_normal((4, 3))
    check_op(ad.exp, x.copy())
    check_op(ad.tanh, x.copy())
    check_op(ad.gelu, x.copy())
    check_op(ad.log, np.abs(x) + 0.5)


def test_reduction_grads():
    x = RNG.standard_normal((3, 4, 5))
    check_op(lambda a: ad.tensor_sum(a, axis=1), x.copy())
    check_op(lambda a: ad.tensor_sum(a, axis=(0, 2), keepdims=True), x.copy())
    check_op(lambda a: ad.tensor_mean(a, axis=2), x.copy())
    check_op(lambda a: ad.tensor_mean(a), x.copy())


def test_shape_op_grads():
    x = RNG.standard_normal((2, 3, 4))
    check_op(lambda a: ad.reshape(a, (6, 4)), x.copy())
    check_op(lambda a: ad.transpose(a, (2, 0, 1)), x.copy())
    check_op(lambda a: ad.pad_axis(a, 1, 2, 1), x.copy())
    check_op(lambda a: a[:, 1:3, ::2], x.copy())
    y = RNG.standard_normal((2, 2, 4))
    check_op(lambda a, b: ad.concat([a, b], axis=1), x.copy(), y.copy())


def test_take_grad_with_repeats():
    table = RNG.standard_normal((2, 7))
    idx = np.array([[0, 3, 3], [6, 0, 1]])
    check_op(lambda t: ad.take(t, idx, axis=1), table.copy())


def test_softmax_rows_sum_to_one_and_grad():
    x = RNG.standard_normal((3, 4, 6))
    out = ad.softmax(Tensor(x), axis=-1)
    assert np.allclose(out.data.sum(axis=-1), 1.0, atol=1e-12)
    check_op(lambda a: ad.softmax(a, axis=-1), x.copy())


def test_log_softmax_grad():
    check_op(lambda a: ad.log_softmax(a, axis=-1), RNG.standard_normal((5, 4)))


def test_layer_norm_grad_and_stats():
    x = RNG.standard_normal((4, 6)) * 3 + 1
    out = ad.layer_norm(Tensor(x), axis=-1)
    assert np.allclose(out.data.mean(axis=-1), 0.0, atol=1e-9)
    assert np.allclose(out.data.var(axis=-1), 1.0, atol=1e-3)
    check_op(lambda a: ad.layer_norm(a, axis=-1), x.copy())


def test_fanout_accumulation():
    # x used twice: d/dx (x*x + x) = 2x + 1
    x = Tensor(np.array([[1.5, -2.0]]), requires_grad=True)
    out = ad.tensor_sum(ad.add(ad.mul(x, x), x))
    out.backward()
    assert np.allclose(x.grad, 2 * x.data + 1)


def test_same_tensor_both_operands():
    x = Tensor(np.array([3.0, 4.0]).reshape(1, 2), requires_grad=True)
    out = ad.tensor_sum(ad.add(x, x))
    out.backward()
    assert np.allclose(x.grad, 2.0)


def test_diamond_graph():
    # z = (x+1)*(x+2); dz/dx = 2x+3
    x = Tensor(np.array([[2.0]]), requires_grad=True)
    a = ad.add(x, Tensor(1.0))
    b = ad.add(x, Tensor(2.0))
    out = ad.tensor_sum(ad.mul(a, b))
    out.backward()
    assert np.allclose(x.grad, 2 * 2.0 + 3)


def test_constants_get_no_grad():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    c = Tensor(np.ones((2, 2)))
    out = ad.tensor_sum(ad.mul(x, c))
    out.backward()
    assert c.grad is None
    assert x.grad is not None


def test_detach_blocks_gradient():
    x = Tensor(np.ones((2, 2)) * 2.0, requires_grad=True)
    out = ad.tensor_sum(ad.mul(x.detach(), x))
    out.backward()
    assert np.allclose(x.grad, 2.0)  # only the non-detached path contributes


def test_operator_sugar():
    x = Tensor(np.array([[2.0, 3.0]]), requires_grad=True)
    y = ((x + 1.0) * 2.0 - 1.0) / 3.0
    z = (-y) ** 2
    out = z.sum()
    out.backward()
    # z = ((2x+1)/3)^2, dz/dx = 2*(2x+1)/3 * 2/3
    expected = 2 * (2 * x.data + 1) / 3 * (2.0 / 3.0)
    assert np.allclose(x.grad, expected)
