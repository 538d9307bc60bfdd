from .quantizer import (
    QuantizerParams,
    QuantTensor,
    quantize,
    codes,
    values_from_codes,
    code_of,
    value_of,
    code_to_bits,
    bits_to_code,
    active_range,
    fake_quantize,
    quantize_ste_grad,
    surrogate,
    weight_scale,
    weight_codes,
    quantize_weights,
    fake_quantize_weights,
)

__all__ = [
    "QuantizerParams",
    "QuantTensor",
    "quantize",
    "codes",
    "values_from_codes",
    "code_of",
    "value_of",
    "code_to_bits",
    "bits_to_code",
    "active_range",
    "fake_quantize",
    "quantize_ste_grad",
    "surrogate",
    "weight_scale",
    "weight_codes",
    "quantize_weights",
    "fake_quantize_weights",
]
