"""
Truth-table generation and the table-driven forward pass.

A neuron's table row index packs its input codes field by field: the input at
the lowest mask index is the most significant field, each field MSB-first.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError
from pydantic_core import from_json, to_json

from ..config import get_settings
from ..errors import DimensionMismatchError, MissingTableError, ModelFormatError, TableGenLimitError
from ..layers import LinearStage, QuantizedNetwork, QuantLayer, SparseConvLayer, run_layers
from ..models import ConvTablesDoc, LayerTablesDoc
from ..quant import code_to_bits

logger = logging.getLogger(__name__)

CHUNK_ROWS = 1 << 16


@dataclass(frozen=True)
class TruthTable:
    """Exhaustive map from a neuron's packed input code to its output code."""

    input_bits: int
    out_bit_width: int
    outputs: np.ndarray  # int64, indexed by input code

    @property
    def rows(self) -> int:
        return 1 << self.input_bits

    def input_strings(self) -> List[str]:
        return [code_to_bits(r, self.input_bits) for r in range(self.rows)]

    def output_strings(self) -> List[str]:
        return [code_to_bits(int(c), self.out_bit_width) for c in self.outputs]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TruthTable)
            and (self.input_bits, self.out_bit_width) == (other.input_bits, other.out_bit_width)
            and np.array_equal(self.outputs, other.outputs)
        )


NeuronTables = Dict[int, TruthTable]


@dataclass
class LayerTables:
    index: int
    neurons: NeuronTables


@dataclass
class ConvTables:
    index: int
    dw: NeuronTables
    pt: NeuronTables


Tables = Union[LayerTables, ConvTables]


def pack_fields(field_codes: np.ndarray, field_width: int) -> np.ndarray:
    """Row index of field codes [..., fan_in], first field most significant."""
    fan_in = field_codes.shape[-1]
    index = np.zeros(field_codes.shape[:-1], dtype=np.int64)
    for j in range(fan_in):
        index |= field_codes[..., j].astype(np.int64) << (field_width * (fan_in - 1 - j))
    return index


def unpack_fields(index: np.ndarray, fan_in: int, field_width: int) -> np.ndarray:
    """Inverse of pack_fields: [rows] -> [rows, fan_in]."""
    field_mask = (1 << field_width) - 1
    shifts = field_width * (fan_in - 1 - np.arange(fan_in))
    return (index[:, None] >> shifts[None, :]) & field_mask


def generate_neuron_table(stage: LinearStage, n: int, limit: Optional[int] = None) -> TruthTable:
    """Tabulate one neuron by running every input code through the float path."""
    limit = get_settings().table_gen_limit if limit is None else limit
    bits = stage.fan_in_bits
    if bits > limit:
        raise TableGenLimitError(
            f"neuron {n} has {bits} fan-in bits, above the table generation limit of {limit}"
        )
    width = stage.input_quantizer.bit_width
    outputs = np.empty(1 << bits, dtype=np.int64)
    for start in range(0, 1 << bits, CHUNK_ROWS):
        index = np.arange(start, min(start + CHUNK_ROWS, 1 << bits), dtype=np.int64)
        outputs[index] = stage.neuron_codes(n, unpack_fields(index, stage.fan_in, width))
    return TruthTable(bits, stage.output_quantizer.bit_width, outputs)


def generate_stage_tables(
    stage: LinearStage, limit: Optional[int] = None, workers: Optional[int] = None
) -> NeuronTables:
    """Per-neuron tabulation over a thread pool, merged in neuron order."""
    settings = get_settings()
    limit = settings.table_gen_limit if limit is None else limit
    workers = settings.workers if workers is None else workers
    if stage.fan_in_bits > limit:
        raise TableGenLimitError(
            f"{stage.fan_in_bits} fan-in bits per neuron exceed the table generation limit of {limit}"
        )
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        tables = list(pool.map(lambda n: generate_neuron_table(stage, n, limit), range(stage.neurons)))
    return dict(enumerate(tables))


def fits_table_limit(layer: QuantLayer, limit: Optional[int] = None) -> bool:
    limit = get_settings().table_gen_limit if limit is None else limit
    return all(stage.fan_in_bits <= limit for stage in layer.stages)


def generate_truth_table(
    layer: QuantLayer, limit: Optional[int] = None, workers: Optional[int] = None
) -> Tables:
    if isinstance(layer, SparseConvLayer):
        tables = ConvTables(
            layer.index,
            dw=generate_stage_tables(layer.depthwise, limit, workers),
            pt=generate_stage_tables(layer.pointwise, limit, workers),
        )
    else:
        (stage,) = layer.stages
        tables = LayerTables(layer.index, generate_stage_tables(stage, limit, workers))
    logger.info("Tabulated layer %d (%s)", layer.index, layer.kind)
    return tables


def generate_tables(
    network: QuantizedNetwork, count: Optional[int] = None, limit: Optional[int] = None, workers: Optional[int] = None
) -> List[Tables]:
    """Tables for the first `count` layers (all by default)."""
    layers = network.layers if count is None else network.layers[:count]
    return [generate_truth_table(layer, limit, workers) for layer in layers]


def stage_table_forward(stage: LinearStage, tables: NeuronTables, x_codes: np.ndarray) -> np.ndarray:
    """Look every neuron of a stage up in its table; x_codes is [..., width]."""
    if x_codes.shape[-1] != stage.width:
        raise DimensionMismatchError(f"expected {stage.width} input codes, got {x_codes.shape[-1]}")
    out = np.empty(x_codes.shape[:-1] + (stage.neurons,), dtype=np.int64)
    mask = stage.mask.numpy()
    width = stage.input_quantizer.bit_width
    for n in range(stage.neurons):
        if n not in tables:
            raise MissingTableError(f"no truth table for neuron {n}")
        out[..., n] = tables[n].outputs[pack_fields(x_codes[..., mask[n]], width)]
    return out


def conv_table_forward(layer: SparseConvLayer, tables: ConvTables, x_codes: np.ndarray) -> np.ndarray:
    """
    Table-driven convolution, visiting every input window in turn.

    This is a verification path and makes no attempt to be fast.
    """
    h, w, c = layer.height, layer.width, layer.channels
    x_codes = np.asarray(x_codes, dtype=np.int64)
    if x_codes.shape[-1] != h * w * c:
        raise DimensionMismatchError(f"expected a {h}x{w}x{c} image, got {x_codes.shape[-1]} features")
    image = x_codes.reshape(-1, h, w, c)
    k = layer.kernel_size
    rlen = 1 + (h - k) // layer.stride
    clen = 1 + (w - k) // layer.stride
    dw_mask = layer.depthwise.mask.numpy()
    dw_width = layer.input_quantizer.bit_width
    out = np.empty((image.shape[0], rlen, clen, layer.feature_maps), dtype=np.int64)
    for r in range(rlen):
        for col in range(clen):
            y0, x0 = layer.window_origin(r, col)
            inter = np.empty((image.shape[0], layer.depthwise_channels), dtype=np.int64)
            for d in range(layer.depthwise_channels):
                if d not in tables.dw:
                    raise MissingTableError(f"layer {layer.index}: no depthwise table for kernel {d}")
                window = image[:, y0:y0 + k, x0:x0 + k, layer.source_channel(d)].reshape(-1, k * k)
                index = pack_fields(window[:, dw_mask[d]], dw_width)
                inter[:, d] = tables.dw[d].outputs[index]
            out[:, r, col, :] = stage_table_forward(layer.pointwise, tables.pt, inter)
    return out.reshape(image.shape[0], -1)


def layer_table_forward(
    network: QuantizedNetwork, tables: Sequence[Optional[Tables]], i: int, x: np.ndarray
) -> np.ndarray:
    """Look layer i up in its tables, given its assembled input codes."""
    if i >= len(tables) or tables[i] is None:
        raise MissingTableError(f"no truth tables for layer {i}")
    layer = network.layers[i]
    if isinstance(layer, SparseConvLayer):
        return conv_table_forward(layer, tables[i], x)
    return stage_table_forward(layer.stages[0], tables[i].neurons, x)


def table_forward(
    network: QuantizedNetwork, tables: Sequence[Optional[Tables]], x_codes: np.ndarray, count: Optional[int] = None
) -> List[np.ndarray]:
    """Chain table lookups through the network; returns every evaluated layer's output codes."""
    return run_layers(network.topology, x_codes, lambda i, x: layer_table_forward(network, tables, i, x), count)


def _rows_doc(tables: NeuronTables) -> Dict[str, list]:
    return {str(n): [t.input_strings(), t.output_strings()] for n, t in tables.items()}


def tables_to_json(tables: Tables) -> Dict[str, object]:
    if isinstance(tables, ConvTables):
        return {"dw": _rows_doc(tables.dw), "pt": _rows_doc(tables.pt)}
    return _rows_doc(tables.neurons)


def _rows_from_doc(doc: Dict[str, tuple], where: str) -> NeuronTables:
    tables: NeuronTables = {}
    for key in sorted(doc, key=int):
        inputs, outputs = doc[key]
        if not inputs or len(inputs) != len(outputs):
            raise ModelFormatError(f"{where} neuron {key}: input and output lists must be non-empty and aligned")
        bits = len(inputs[0])
        if len(inputs) != 1 << bits or any(s != code_to_bits(r, bits) for r, s in enumerate(inputs)):
            raise ModelFormatError(f"{where} neuron {key}: inputs must enumerate all {bits}-bit codes in order")
        out_width = len(outputs[0])
        if any(len(s) != out_width or set(s) - {"0", "1"} for s in outputs):
            raise ModelFormatError(f"{where} neuron {key}: outputs must be {out_width}-bit strings")
        tables[int(key)] = TruthTable(bits, out_width, np.array([int(s, 2) for s in outputs], dtype=np.int64))
    return tables


def tables_from_json(index: int, data: object) -> Tables:
    where = f"layer {index}"
    try:
        if isinstance(data, dict) and set(data) == {"dw", "pt"}:
            doc = ConvTablesDoc.model_validate(data)
            return ConvTables(index, _rows_from_doc(doc.dw, where + " dw"), _rows_from_doc(doc.pt, where + " pt"))
        doc = LayerTablesDoc.model_validate(data)
    except ValidationError as e:
        raise ModelFormatError(f"{where} tables: {e}") from e
    return LayerTables(index, _rows_from_doc(doc.root, where))


def table_path(out_dir: Union[str, Path], index: int) -> Path:
    return Path(out_dir) / f"layer{index}.json"


def save_tables(tables: Sequence[Tables], out_dir: Union[str, Path]) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for t in tables:
        path = table_path(out_dir, t.index)
        path.write_bytes(to_json(tables_to_json(t)) + b"\n")
        paths.append(path)
    logger.info("Wrote %d table files to %s", len(paths), out_dir)
    return paths


def load_tables(out_dir: Union[str, Path], count: int) -> List[Optional[Tables]]:
    """Tables of layers 0..count-1; layers without a file load as None."""
    loaded: List[Optional[Tables]] = []
    for i in range(count):
        path = table_path(out_dir, i)
        if not path.exists():
            loaded.append(None)
            continue
        try:
            data = from_json(path.read_bytes())
        except ValueError as e:
            raise ModelFormatError(f"{path} is not valid JSON: {e}") from e
        loaded.append(tables_from_json(i, data))
    return loaded
