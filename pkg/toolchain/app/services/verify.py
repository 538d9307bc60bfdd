"""
Triple-equivalence check: encoded float forward, table forward and netlist
simulation must agree bit for bit.
"""
import logging
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..config import get_settings
from ..errors import VerificationMismatch
from ..layers import QuantizedNetwork, assemble_input
from ..models import ModelFile
from .netlist import Style, build_netlist, compilable_prefix
from .simulate import bits_to_codes, bits_to_string, codes_to_bits, simulate, simulate_stream
from .tablegen import Tables, fits_table_limit, generate_truth_table, layer_table_forward, table_forward

logger = logging.getLogger(__name__)


@dataclass
class VerificationReport:
    samples: int
    layers_checked: int
    layers_tabulated: int
    layers_total: int
    style: str
    latency: int

    @property
    def complete(self) -> bool:
        return self.layers_checked == self.layers_total

    def to_dict(self) -> dict:
        return {**asdict(self), "complete": self.complete}


def random_inputs(network: QuantizedNetwork, samples: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed % 2 ** 64)
    levels = network.input_quantizer.levels
    return rng.integers(0, levels, size=(samples, network.topology.input_features), dtype=np.int64)


def _compare(
    stages: str, x_codes: np.ndarray, in_bw: int, expected: np.ndarray, actual: np.ndarray, out_bw: int
) -> None:
    diff = np.flatnonzero((expected != actual).any(axis=1))
    if diff.size:
        s = int(diff[0])
        raise VerificationMismatch(
            stages=stages,
            sample=s,
            input_bits=bits_to_string(codes_to_bits(x_codes[s:s + 1], in_bw)[0]),
            expected=bits_to_string(codes_to_bits(expected[s:s + 1], out_bw)[0]),
            actual=bits_to_string(codes_to_bits(actual[s:s + 1], out_bw)[0]),
        )


def check_equivalence(
    network: QuantizedNetwork,
    tables: Sequence[Optional[Tables]],
    x_codes: np.ndarray,
    style: Style = "combinational",
    count: Optional[int] = None,
) -> int:
    """Run all three paths over x_codes; raises VerificationMismatch on the first disagreement."""
    count = compilable_prefix(network) if count is None else count
    ir = build_netlist(network, tables, style, count)
    in_bw = network.input_quantizer.bit_width
    out_bw = network.layers[count - 1].output_quantizer.bit_width

    float_outs = network.forward_codes(x_codes, count)
    table_outs = table_forward(network, tables, x_codes, count)
    for i, (f, t) in enumerate(zip(float_outs, table_outs)):
        bw = network.layers[i].output_quantizer.bit_width
        _compare(f"float/table layer {i}", x_codes, in_bw, f, t, bw)

    bits = codes_to_bits(x_codes, in_bw)
    if ir.pipelined:
        # one sample per cycle, then enough held cycles to drain the pipeline
        stream = np.concatenate([bits, np.repeat(bits[-1:], ir.latency - 1, axis=0)])[:, None, :]
        outputs = simulate_stream(ir, stream)[ir.latency - 1:, 0, :]
    else:
        outputs = simulate(ir, bits)
    _compare("table/netlist", x_codes, in_bw, table_outs[-1], bits_to_codes(outputs, out_bw), out_bw)
    return ir.latency


def check_tables(
    network: QuantizedNetwork, tables: Sequence[Optional[Tables]], x_codes: np.ndarray, start: int = 0
) -> List[int]:
    """
    Layer-by-layer float/table check from layer `start` on. Each tabulated
    layer is fed the float outputs of its producers; layers without tables are
    passed over. Returns the indices checked.
    """
    if start >= len(network):
        return []
    float_outs = network.forward_codes(x_codes)
    in_bw = network.input_quantizer.bit_width
    checked = []
    for i in range(start, len(network)):
        if i >= len(tables) or tables[i] is None:
            continue
        x = assemble_input(network.topology, i, np.asarray(x_codes, dtype=np.int64), float_outs)
        actual = layer_table_forward(network, tables, i, x)
        bw = network.layers[i].output_quantizer.bit_width
        _compare(f"float/table layer {i}", x_codes, in_bw, float_outs[i], actual, bw)
        checked.append(i)
    return checked


def _complete_tables(
    network: QuantizedNetwork, tables: Optional[Sequence[Optional[Tables]]], count: int
) -> List[Optional[Tables]]:
    """Given tables, plus fresh ones for the compiled prefix and every other layer within the limit."""
    given = list(tables or [])
    complete: List[Optional[Tables]] = []
    for i, layer in enumerate(network.layers):
        if i < len(given) and given[i] is not None:
            complete.append(given[i])
        elif i < count or fits_table_limit(layer):
            complete.append(generate_truth_table(layer))
        else:
            logger.info("Layer %d exceeds the table generation limit and is not tabulated", i)
            complete.append(None)
    return complete


def verify(
    model: ModelFile,
    samples: Optional[int] = None,
    seed: Optional[int] = None,
    style: Style = "combinational",
    tables: Optional[Sequence[Optional[Tables]]] = None,
    extra_inputs: Optional[np.ndarray] = None,
) -> VerificationReport:
    """
    Check a model on random quantized inputs, plus any extra input codes given.

    The leading sparse_linear layers are compiled and all three paths are
    compared. Every later layer whose tables fit the limit is checked float
    against table.
    """
    settings = get_settings()
    samples = settings.verify_samples if samples is None else samples
    seed = settings.default_seed if seed is None else seed
    network = QuantizedNetwork(model)
    count = compilable_prefix(network)
    tables = _complete_tables(network, tables, count)
    x_codes = random_inputs(network, samples, seed)
    if extra_inputs is not None:
        x_codes = np.concatenate([x_codes, np.asarray(extra_inputs, dtype=np.int64)])
    latency = check_equivalence(network, tables, x_codes, style, count) if count else 0
    tabulated = check_tables(network, tables, x_codes, start=count)
    report = VerificationReport(
        samples=len(x_codes),
        layers_checked=count,
        layers_tabulated=count + len(tabulated),
        layers_total=len(network),
        style=style,
        latency=latency,
    )
    if count == 0:
        logger.warning("Model does not start with a sparse_linear layer; no netlist was checked")
    elif not report.complete:
        logger.info("Layers %d..%d are not compiled", count, len(network) - 1)
    logger.info(
        "Verified %d samples: %d layers against the netlist, %d against their tables",
        report.samples, count, report.layers_tabulated,
    )
    return report
