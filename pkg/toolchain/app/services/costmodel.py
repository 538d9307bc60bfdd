"""
Analytical 6:1 LUT cost model.

A neuron with N fan-in bits and M output bits is a set of M boolean
functions of N inputs; each is decomposed onto 6-input LUTs.
"""
import logging
from typing import Literal, NamedTuple, Union

from ..errors import InvalidSpecError
from ..models import LayerCost, LutCostReport, ModelFile, TopologySpec

logger = logging.getLogger(__name__)

BASE_FAN_IN = 6
DENSE_SLOPE = 1.0699
DENSE_OFFSET = 10.779


class StaticMapping(NamedTuple):
    lut_count: int
    truth_table_bits: int
    config_bits: int
    utilization: float


class ConvCosts(NamedTuple):
    dense: int
    depthwise: int
    pointwise: int


def _check_positive(**kwargs: int) -> None:
    bad = {name: value for name, value in kwargs.items() if value <= 0}
    if bad:
        raise InvalidSpecError(f"cost arguments must be positive: {bad}")


def lut_cost_closed(n: int, m: int) -> int:
    """LUT_{N,M} = M * (2^(N-4) - (-1)^N) / 3; a single LUT per output bit below six inputs."""
    _check_positive(fan_in_bits=n, output_bits=m)
    if n < BASE_FAN_IN:
        return m
    return m * (2 ** (n - 4) - (-1) ** n) // 3


def lut_cost_recursive(n: int, m: int, form: Literal["one_step", "two_step"] = "two_step") -> int:
    """
    Recurrence forms of the same count, unrolled from the six-input base.

    one_step: LUT_N = M * (2 * LUT_{N-1} / M - (-1)^N), from LUT_6 = M.
    two_step: LUT_N = LUT_{N-2} + M * 2^(N-6), from LUT_6 = M and LUT_7 = 3M.
    """
    _check_positive(fan_in_bits=n, output_bits=m)
    if n < BASE_FAN_IN:
        return m
    if form == "one_step":
        cost = m
        for k in range(BASE_FAN_IN + 1, n + 1):
            cost = m * (2 * cost // m - (-1) ** k)
        return cost
    if form != "two_step":
        raise InvalidSpecError(f"unknown recurrence form {form!r}")
    costs = {BASE_FAN_IN: m, BASE_FAN_IN + 1: 3 * m}
    for k in range(BASE_FAN_IN + 2, n + 1):
        costs[k] = costs[k - 2] + m * 2 ** (k - BASE_FAN_IN)
    return costs[n]


def static_6lut_map(fan_in: int) -> StaticMapping:
    """Static mapping of one fan_in-bit boolean function onto 6:1 LUTs."""
    luts = lut_cost_closed(fan_in, 1)
    table_bits = 2 ** fan_in
    config_bits = 64 * luts
    return StaticMapping(luts, table_bits, config_bits, table_bits / config_bits)


def dense_quant_linear_cost(n_out: int, n_in: int, bw_in: int, bw_wt: int) -> float:
    """Fitted cost of a dense quantized linear layer: nO * (nI * BWin * BWwt * 1.0699 + 10.779)."""
    if min(n_out, n_in, bw_in, bw_wt) < 0:
        raise InvalidSpecError("dense layer cost arguments must be non-negative")
    if n_out == 0:
        return 0.0
    return n_out * (n_in * bw_in * bw_wt * DENSE_SLOPE + DENSE_OFFSET)


def conv_costs(
    outpix: int, o_bits: int, n_ofm: int, n_ifm: int, k: int, i_bits: int, x_k: int, x_s: int
) -> ConvCosts:
    """Unfolded dense, sparse depthwise and sparse pointwise convolution costs."""
    _check_positive(outpix=outpix, o_bits=o_bits, n_ofm=n_ofm, n_ifm=n_ifm, k=k, i_bits=i_bits, x_k=x_k, x_s=x_s)
    per_output = outpix * o_bits * n_ofm
    return ConvCosts(
        dense=per_output * lut_cost_closed(n_ifm * k * k * i_bits, 1),
        depthwise=per_output * lut_cost_closed(x_k * i_bits, 1),
        pointwise=per_output * lut_cost_closed(x_s * i_bits, 1),
    )


def sparse_layer_cost(neurons: int, fan_in: int, in_bit_width: int, out_bit_width: int) -> int:
    return neurons * lut_cost_closed(fan_in * in_bit_width, out_bit_width)


def layer_cost(spec: TopologySpec, i: int) -> LayerCost:
    layer = spec.layers[i]
    if layer.kind == "sparse_linear":
        return LayerCost(
            index=i,
            kind=layer.kind,
            neurons=layer.neurons,
            fan_in_bits=layer.fan_in * layer.in_bit_width,
            out_bits=layer.out_bit_width,
            luts=sparse_layer_cost(layer.neurons, layer.fan_in, layer.in_bit_width, layer.out_bit_width),
        )
    if layer.kind == "dense_quant_linear":
        n_in = spec.input_width(i)
        luts = dense_quant_linear_cost(layer.neurons, n_in, layer.in_bit_width, layer.weight_bit_width)
        return LayerCost(
            index=i,
            kind=layer.kind,
            neurons=layer.neurons,
            fan_in_bits=n_in * layer.in_bit_width,
            out_bits=layer.out_bit_width,
            luts=luts,
            breakdown={"dense": luts},
        )
    h, w, channels = spec.input_geometry(i)
    out_h, out_w, _ = spec.output_geometry(i)
    costs = conv_costs(
        outpix=out_h * out_w,
        o_bits=layer.out_bit_width,
        n_ofm=layer.neurons,
        n_ifm=channels,
        k=layer.kernel_size,
        i_bits=layer.in_bit_width,
        x_k=layer.kernel_fan_in,
        x_s=layer.pointwise_fan_in,
    )
    return LayerCost(
        index=i,
        kind=layer.kind,
        neurons=layer.neurons,
        fan_in_bits=layer.kernel_fan_in * layer.in_bit_width,
        out_bits=layer.out_bit_width,
        luts=costs.depthwise + costs.pointwise,
        breakdown=costs._asdict(),
    )


def report(model: Union[ModelFile, TopologySpec]) -> LutCostReport:
    """Per-layer analytical LUT cost of a topology or trained model."""
    spec = model.topology if isinstance(model, ModelFile) else model
    layers = [layer_cost(spec, i) for i in range(len(spec.layers))]
    total = sum(layer.luts for layer in layers)
    logger.debug("cost report: %d layers, %s LUTs", len(layers), total)
    return LutCostReport(layers=layers, total=total)
