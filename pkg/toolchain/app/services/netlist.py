"""
Netlist IR: LUT nodes wired to bit slices of each layer's input bus.

Input feature f of bit width B occupies bus bits [f*B + B - 1 : f*B]. A layer's
input bus is the previous layer's output in the low bits followed by its
skip sources in ascending order.
"""
import logging
from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np

from ..errors import MissingTableError, UnsupportedLayerError
from ..layers import QuantizedNetwork, SparseLinearLayer
from .tablegen import LayerTables, Tables

logger = logging.getLogger(__name__)

Style = Literal["combinational", "pipelined"]
STYLES = ("combinational", "pipelined")


@dataclass(frozen=True)
class NeuronNode:
    neuron: int
    selection: Tuple[int, ...]  # input bus bits, most significant first
    out_lo: int
    out_bit_width: int
    table: np.ndarray

    @property
    def in_bits(self) -> int:
        return len(self.selection)

    @property
    def out_hi(self) -> int:
        return self.out_lo + self.out_bit_width - 1


@dataclass(frozen=True)
class NetlistLayer:
    index: int
    input_width: int
    output_width: int
    sources: Tuple[int, ...]  # producer layers, low bits first; -1 is the primary input
    nodes: Tuple[NeuronNode, ...]


@dataclass(frozen=True)
class NetlistIR:
    layers: Tuple[NetlistLayer, ...]
    input_width: int
    output_width: int
    style: Style = "combinational"

    @property
    def pipelined(self) -> bool:
        return self.style == "pipelined"

    @property
    def register_stages(self) -> int:
        """Input register plus one register per layer when pipelined."""
        return len(self.layers) + 1 if self.pipelined else 0

    @property
    def latency(self) -> int:
        return self.register_stages

    def skip_delays(self) -> dict[int, int]:
        """Extra register stages each skip source needs: max over its destinations of d - s - 1."""
        delays: dict[int, int] = {}
        for layer in self.layers:
            for source in layer.sources[1:]:
                delays[source] = max(delays.get(source, 0), layer.index - source - 1)
        return delays


def field_bits(feature: int, bit_width: int) -> List[int]:
    """Bus bits of one feature, most significant first."""
    return [feature * bit_width + t for t in reversed(range(bit_width))]


def compilable_prefix(network: QuantizedNetwork) -> int:
    """Length of the leading run of sparse_linear layers."""
    count = 0
    for layer in network.layers:
        if not isinstance(layer, SparseLinearLayer):
            break
        count += 1
    return count


def build_netlist(
    network: QuantizedNetwork,
    tables: Sequence[Optional[Tables]],
    style: Style = "combinational",
    count: Optional[int] = None,
) -> NetlistIR:
    """
    Netlist of the first `count` layers (all by default); every included
    layer must be a tabulated sparse_linear layer.
    """
    if style not in STYLES:
        raise UnsupportedLayerError(f"unknown netlist style {style!r}")
    topology = network.topology
    count = len(network.layers) if count is None else count
    if count < 1:
        raise UnsupportedLayerError("network has no leading sparse_linear layer to compile")
    layers = []
    for i in range(count):
        layer = network.layers[i]
        if not isinstance(layer, SparseLinearLayer):
            raise UnsupportedLayerError(
                f"layer {i} is {layer.kind}; netlists can only be built from sparse_linear layers"
            )
        layer_tables = tables[i] if i < len(tables) else None
        if not isinstance(layer_tables, LayerTables):
            raise MissingTableError(f"no truth tables for layer {i}")
        in_bw = layer.input_quantizer.bit_width
        out_bw = layer.output_quantizer.bit_width
        nodes = []
        for n, support in enumerate(layer.mask.tolist()):
            if n not in layer_tables.neurons:
                raise MissingTableError(f"layer {i}: no truth table for neuron {n}")
            selection = tuple(bit for f in support for bit in field_bits(f, in_bw))
            nodes.append(NeuronNode(n, selection, n * out_bw, out_bw, layer_tables.neurons[n].outputs))
        layers.append(
            NetlistLayer(
                index=i,
                input_width=layer.input_width * in_bw,
                output_width=layer.output_width * out_bw,
                sources=tuple(topology.producers(i)),
                nodes=tuple(nodes),
            )
        )
    ir = NetlistIR(
        layers=tuple(layers),
        input_width=topology.input_features * topology.input_bit_width,
        output_width=layers[-1].output_width,
        style=style,
    )
    logger.info("Built %s netlist: %d layers, %d LUT nodes", style, len(layers), sum(len(l.nodes) for l in layers))
    return ir
