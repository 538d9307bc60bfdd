"""
Activation quantizers.

A 1-bit quantizer is a hard-tanh sign function onto {-max_val, +max_val}; wider
quantizers are unsigned ReLU grids with 2^b levels spaced max_val / (2^b - 1).
Codes are the integers a truth table is indexed by: 0/1 for the sign quantizer
(0 is the negative level) and 0..2^b-1 for the ReLU grid.
"""
import math
from typing import NamedTuple, Optional

import torch
from pydantic import BaseModel, Field

from ..errors import NonFiniteValueError, OffGridValueError


GRID_TOLERANCE = 1e-9


class QuantizerParams(BaseModel):
    """Fixed-scale activation quantizer."""

    bit_width: int = Field(ge=1)
    max_val: float = Field(gt=0)

    class Config:
        frozen = True

    @property
    def mode(self) -> str:
        return "hardtanh" if self.bit_width == 1 else "relu"

    @property
    def levels(self) -> int:
        return 2 ** self.bit_width

    @property
    def scale(self) -> float:
        if self.bit_width == 1:
            return self.max_val
        return self.max_val / (2 ** self.bit_width - 1)


class QuantTensor(NamedTuple):
    """Quantized tensor in dequantized representation."""

    values: torch.Tensor
    scale: float
    bit_width: int


def _check_finite(x: torch.Tensor) -> None:
    if not bool(torch.isfinite(x).all()):
        raise NonFiniteValueError("Quantizer input contains NaN or infinite values")


def codes(x: torch.Tensor, p: QuantizerParams) -> torch.Tensor:
    """Integer codes for real inputs (int64)."""
    _check_finite(x)
    if p.bit_width == 1:
        return (x >= 0).to(torch.int64)
    # floor(q + 0.5) is round-half-away-from-zero on the non-negative side;
    # negative inputs clamp to code 0 either way
    q = torch.floor(x / p.scale + 0.5)
    return q.clamp(0, p.levels - 1).to(torch.int64)


def values_from_codes(c: torch.Tensor, p: QuantizerParams, dtype=torch.float64) -> torch.Tensor:
    if p.bit_width == 1:
        return torch.where(
            c == 1,
            torch.tensor(p.max_val, dtype=dtype),
            torch.tensor(-p.max_val, dtype=dtype),
        )
    return c.to(dtype) * p.scale


def quantize(x: torch.Tensor, p: QuantizerParams) -> QuantTensor:
    """Quantize a real tensor onto the quantizer grid."""
    c = codes(x, p)
    dtype = x.dtype if x.is_floating_point() else torch.float64
    return QuantTensor(values_from_codes(c, p, dtype=dtype), p.scale, p.bit_width)


def value_of(code: int, p: QuantizerParams) -> float:
    if not 0 <= code < p.levels:
        raise OffGridValueError(f"Code {code} outside 0..{p.levels - 1}")
    if p.bit_width == 1:
        return p.max_val if code == 1 else -p.max_val
    return code * p.scale


def code_of(value: float, p: QuantizerParams) -> int:
    """Inverse of value_of; rejects values that are not on the grid."""
    tolerance = GRID_TOLERANCE * max(abs(value), p.scale)
    if p.bit_width == 1:
        for code, level in ((0, -p.max_val), (1, p.max_val)):
            if abs(value - level) <= tolerance:
                return code
        raise OffGridValueError(f"{value} is not ±{p.max_val}")
    code = int(math.floor(value / p.scale + 0.5))
    if not 0 <= code < p.levels or abs(value - code * p.scale) > tolerance:
        raise OffGridValueError(
            f"{value} is not on the {p.bit_width}-bit grid with step {p.scale}"
        )
    return code


def code_to_bits(code: int, width: int) -> str:
    """MSB-first bit string."""
    return format(code, f"0{width}b") if width > 0 else ""


def bits_to_code(bits: str) -> int:
    return int(bits, 2) if bits else 0


def active_range(p: QuantizerParams) -> tuple[float, float]:
    if p.bit_width == 1:
        return -p.max_val, p.max_val
    return 0.0, p.max_val


def surrogate(x: torch.Tensor, p: QuantizerParams) -> torch.Tensor:
    """Clipped identity whose derivative the straight-through estimator uses."""
    low, high = active_range(p)
    return x.clamp(low, high)


def quantize_ste_grad(x: torch.Tensor, p: QuantizerParams, upstream_grad: torch.Tensor) -> torch.Tensor:
    """Straight-through gradient: pass inside the active range, zero outside."""
    low, high = active_range(p)
    inside = (x >= low) & (x <= high)
    return torch.where(inside, upstream_grad, torch.zeros_like(upstream_grad))


class _FakeQuantize(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x: torch.Tensor, bit_width: int, max_val: float) -> torch.Tensor:
        p = QuantizerParams(bit_width=bit_width, max_val=max_val)
        ctx.save_for_backward(x)
        ctx.params = p
        return quantize(x.detach(), p).values

    @staticmethod
    def backward(ctx, grad_output: torch.Tensor):
        (x,) = ctx.saved_tensors
        return quantize_ste_grad(x, ctx.params, grad_output), None, None


def fake_quantize(x: torch.Tensor, p: QuantizerParams) -> torch.Tensor:
    """Quantize in the forward pass, straight-through in the backward pass."""
    return _FakeQuantize.apply(x, p.bit_width, p.max_val)


def weight_scale(w: torch.Tensor, bit_width: int) -> float:
    """Step of the symmetric signed weight grid: max|w| / (2^(b-1) - 1)."""
    peak = float(w.abs().max()) if w.numel() else 0.0
    return peak / (2 ** (bit_width - 1) - 1) if peak > 0 else 1.0


def weight_codes(w: torch.Tensor, bit_width: int, scale: float) -> torch.Tensor:
    """Signed integer weight codes, round-half-away-from-zero, clamped to the grid."""
    _check_finite(w)
    limit = 2 ** (bit_width - 1) - 1
    q = torch.sign(w) * torch.floor(w.abs() / scale + 0.5)
    return q.clamp(-limit, limit).to(torch.int64)


def quantize_weights(w: torch.Tensor, bit_width: int, scale: Optional[float] = None) -> QuantTensor:
    scale = weight_scale(w, bit_width) if scale is None else scale
    c = weight_codes(w, bit_width, scale)
    return QuantTensor(c.to(w.dtype if w.is_floating_point() else torch.float64) * scale, scale, bit_width)


class _FakeQuantizeWeights(torch.autograd.Function):
    @staticmethod
    def forward(ctx, w: torch.Tensor, bit_width: int) -> torch.Tensor:
        return quantize_weights(w.detach(), bit_width).values

    @staticmethod
    def backward(ctx, grad_output: torch.Tensor):
        return grad_output, None


def fake_quantize_weights(w: torch.Tensor, bit_width: int) -> torch.Tensor:
    """Weight grid in the forward pass, identity gradient in the backward pass."""
    return _FakeQuantizeWeights.apply(w, bit_width)
