import pytest
import torch

from app.errors import NonFiniteValueError, OffGridValueError
from app.quant import (
    QuantizerParams,
    bits_to_code,
    code_of,
    code_to_bits,
    codes,
    fake_quantize,
    fake_quantize_weights,
    quantize,
    quantize_ste_grad,
    quantize_weights,
    value_of,
    values_from_codes,
    weight_codes,
)


def test_one_bit_is_hard_tanh():
    p = QuantizerParams(bit_width=1, max_val=1.61)
    q = quantize(torch.tensor([-0.3, 0.7, 0.0], dtype=torch.float64), p)
    assert q.values.tolist() == [-1.61, 1.61, 1.61]
    assert q.scale == 1.61
    assert q.bit_width == 1
    assert p.mode == "hardtanh"


def test_relu_grid():
    p = QuantizerParams(bit_width=2, max_val=3.0)
    assert p.mode == "relu"
    q = quantize(torch.tensor([-0.5, 1.4, 1.5, 2.6, 9.0], dtype=torch.float64), p)
    assert q.values.tolist() == [0.0, 1.0, 2.0, 3.0, 3.0]
    assert q.scale == 1.0


def test_rounding_is_half_away_from_zero():
    p = QuantizerParams(bit_width=3, max_val=7.0)
    assert codes(torch.tensor([0.5, 1.5, 2.5, 3.5]), p).tolist() == [1, 2, 3, 4]


def test_quantizer_properties():
    gen = torch.Generator().manual_seed(0)
    for bits in range(1, 6):
        p = QuantizerParams(bit_width=bits, max_val=2.5)
        x = torch.randn(500, generator=gen, dtype=torch.float64) * 3
        q = quantize(x, p)
        assert torch.equal(quantize(q.values, p).values, q.values)
        order = torch.argsort(x)
        assert bool((q.values[order].diff() >= 0).all())
        c = codes(x, p)
        if bits == 1:
            assert torch.equal(q.values.abs(), torch.full_like(x, p.scale))
        else:
            assert torch.equal(q.values, c.to(torch.float64) * p.scale)


def test_non_finite_input_is_rejected():
    p = QuantizerParams(bit_width=2, max_val=1.0)
    with pytest.raises(NonFiniteValueError):
        quantize(torch.tensor([0.0, float("nan")]), p)
    with pytest.raises(NonFiniteValueError):
        codes(torch.tensor([float("inf")]), p)


def test_code_of_and_value_of():
    one = QuantizerParams(bit_width=1, max_val=1.61)
    assert code_of(-1.61, one) == 0
    assert code_of(1.61, one) == 1
    three = QuantizerParams(bit_width=3, max_val=7.0)
    assert code_of(5.0, three) == 5
    for bits in range(1, 9):
        p = QuantizerParams(bit_width=bits, max_val=1.3)
        for c in range(2 ** bits):
            assert code_of(value_of(c, p), p) == c


def test_grid_values_map_back_to_their_codes():
    for bits in range(1, 7):
        p = QuantizerParams(bit_width=bits, max_val=2.5)
        grid = torch.arange(p.levels)
        values = values_from_codes(grid, p)
        assert torch.equal(codes(values, p), grid)
        assert [code_of(float(v), p) for v in values] == grid.tolist()


def test_off_grid_values_are_rejected():
    p = QuantizerParams(bit_width=3, max_val=7.0)
    with pytest.raises(OffGridValueError):
        code_of(2.5, p)
    with pytest.raises(OffGridValueError):
        code_of(8.0, p)
    with pytest.raises(OffGridValueError):
        code_of(0.3, QuantizerParams(bit_width=1, max_val=1.0))
    with pytest.raises(OffGridValueError):
        value_of(8, p)


def test_bit_strings_are_msb_first():
    assert code_to_bits(5, 3) == "101"
    assert code_to_bits(1, 4) == "0001"
    assert bits_to_code("110") == 6


def test_straight_through_gradient():
    one = QuantizerParams(bit_width=1, max_val=1.61)
    two = QuantizerParams(bit_width=2, max_val=3.0)
    g = torch.ones(1)
    assert quantize_ste_grad(torch.tensor([0.5]), one, g).item() == 1
    assert quantize_ste_grad(torch.tensor([3.0]), one, g).item() == 0
    assert quantize_ste_grad(torch.tensor([-0.1]), two, g).item() == 0
    assert quantize_ste_grad(torch.tensor([3.0]), two, g).item() == 1


def test_fake_quantize_backward():
    p = QuantizerParams(bit_width=2, max_val=3.0)
    x = torch.tensor([-1.0, 0.4, 2.9, 4.0], requires_grad=True)
    y = fake_quantize(x, p)
    assert y.tolist() == [0.0, 0.0, 3.0, 3.0]
    y.sum().backward()
    assert x.grad.tolist() == [0.0, 1.0, 1.0, 0.0]


def test_weight_quantization():
    w = torch.tensor([[0.7, -0.4, 0.1], [-0.7, 0.0, 0.26]], dtype=torch.float64)
    q = quantize_weights(w, 3)
    assert q.scale == pytest.approx(0.7 / 3)
    c = weight_codes(w, 3, q.scale)
    assert c.tolist() == [[3, -2, 0], [-3, 0, 1]]
    assert torch.equal(q.values, c.to(torch.float64) * q.scale)
    assert int(c.abs().max()) <= 3

    v = w.clone().requires_grad_(True)
    fake_quantize_weights(v, 3).sum().backward()
    assert torch.equal(v.grad, torch.ones_like(w))
