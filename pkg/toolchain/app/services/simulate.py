"""
Bit-level netlist simulation.

Bit vectors are uint8 arrays [batch, width] whose column b is bus bit b.
Pipelined netlists are simulated cycle by cycle with every register
starting at zero.
"""
from typing import Dict, List, Optional, Tuple

import numba
import numpy as np

from ..errors import DimensionMismatchError
from .netlist import NetlistIR, NetlistLayer

Registers = Dict[Tuple[int, int], np.ndarray]  # (layer, delay) -> bits; layer -1 is the input register


def codes_to_bits(codes: np.ndarray, bit_width: int) -> np.ndarray:
    """Feature codes [batch, features] to bus bits [batch, features * bit_width]."""
    codes = np.asarray(codes, dtype=np.int64)
    shifts = np.arange(bit_width)
    bits = (codes[:, :, None] >> shifts) & 1
    return bits.reshape(codes.shape[0], -1).astype(np.uint8)


def bits_to_codes(bits: np.ndarray, bit_width: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64).reshape(bits.shape[0], -1, bit_width)
    return (bits << np.arange(bit_width)).sum(axis=2)


def bits_to_string(bits: np.ndarray) -> str:
    """One bus value as a Verilog-ordered string, highest bit first."""
    return "".join(str(int(b)) for b in bits[::-1])


def _check_width(bits: np.ndarray, width: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 2 or bits.shape[1] != width:
        raise DimensionMismatchError(f"expected input bits of shape [batch, {width}], got {list(bits.shape)}")
    return bits


@numba.njit
def _lookup(bus, selection, table, out, out_lo, out_bit_width):
    """One LUT over a batch: gather the selected bits MSB first, look up, scatter the code bits."""
    for r in range(bus.shape[0]):
        index = 0
        for bit in selection:
            index = (index << 1) | bus[r, bit]
        code = table[index]
        for t in range(out_bit_width):
            out[r, out_lo + t] = (code >> t) & 1


def eval_layer(layer: NetlistLayer, bus: np.ndarray) -> np.ndarray:
    bus = np.ascontiguousarray(bus, dtype=np.uint8)
    out = np.zeros((bus.shape[0], layer.output_width), dtype=np.uint8)
    for node in layer.nodes:
        _lookup(
            bus,
            np.asarray(node.selection, dtype=np.int64),
            np.asarray(node.table, dtype=np.int64),
            out,
            node.out_lo,
            node.out_bit_width,
        )
    return out


def _assemble(layer: NetlistLayer, primary: np.ndarray, outputs: Dict[int, np.ndarray]) -> np.ndarray:
    parts = [primary if s < 0 else outputs[s] for s in layer.sources]
    return parts[0] if len(parts) == 1 else np.concatenate(parts, axis=1)


def evaluate(ir: NetlistIR, bits: np.ndarray) -> List[np.ndarray]:
    """Combinational evaluation; returns every layer's output bits."""
    bits = _check_width(bits, ir.input_width)
    outputs: Dict[int, np.ndarray] = {}
    for layer in ir.layers:
        outputs[layer.index] = eval_layer(layer, _assemble(layer, bits, outputs))
    return [outputs[layer.index] for layer in ir.layers]


def _initial_registers(ir: NetlistIR, batch: int) -> Registers:
    regs: Registers = {(-1, 0): np.zeros((batch, ir.input_width), dtype=np.uint8)}
    delays = ir.skip_delays()
    for layer in ir.layers:
        for d in range(delays.get(layer.index, 0) + 1):
            regs[(layer.index, d)] = np.zeros((batch, layer.output_width), dtype=np.uint8)
    return regs


def _clock(ir: NetlistIR, regs: Registers, bits: np.ndarray) -> Registers:
    """One rising edge: every register loads from the current register values."""
    nxt: Registers = {(-1, 0): bits}
    for layer in ir.layers:
        parts = []
        for k, source in enumerate(layer.sources):
            if k == 0:
                parts.append(regs[(source, 0)])
            else:
                parts.append(regs[(source, layer.index - source - 1)])
        bus = parts[0] if len(parts) == 1 else np.concatenate(parts, axis=1)
        nxt[(layer.index, 0)] = eval_layer(layer, bus)
    for (source, d), value in regs.items():
        if source >= 0 and d > 0:
            nxt[(source, d)] = regs[(source, d - 1)]
    return nxt


def simulate_stream(ir: NetlistIR, inputs: np.ndarray) -> np.ndarray:
    """
    Feed one input vector per cycle into a pipelined netlist.

    inputs is [cycles, batch, width]; returns the output port after each
    rising edge, [cycles, batch, output_width]. The result for the input of
    cycle t appears at index t + latency - 1.
    """
    inputs = np.asarray(inputs, dtype=np.uint8)
    if inputs.ndim != 3:
        raise DimensionMismatchError("stream inputs must be [cycles, batch, width]")
    for step in inputs:
        _check_width(step, ir.input_width)
    if not ir.pipelined:
        return np.stack([evaluate(ir, step)[-1] for step in inputs])
    last = ir.layers[-1].index
    regs = _initial_registers(ir, inputs.shape[1])
    outputs = []
    for step in inputs:
        regs = _clock(ir, regs, step)
        outputs.append(regs[(last, 0)])
    return np.stack(outputs)


def simulate(ir: NetlistIR, bits: np.ndarray, cycles: Optional[int] = None) -> np.ndarray:
    """
    Output bits for held input bits [batch, width].

    Combinational netlists are evaluated directly. Pipelined netlists are
    clocked `cycles` times (default: the latency) with the input held.
    """
    bits = _check_width(bits, ir.input_width)
    if not ir.pipelined:
        return evaluate(ir, bits)[-1]
    cycles = ir.latency if cycles is None else cycles
    if cycles < 1:
        raise DimensionMismatchError("a pipelined simulation needs at least one cycle")
    return simulate_stream(ir, np.repeat(bits[None], cycles, axis=0))[-1]
