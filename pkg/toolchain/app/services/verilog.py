"""
Verilog emission: one file per module, named after the module.
"""
import logging
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Tuple, Union

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from ..quant import code_to_bits
from .netlist import NetlistIR, NetlistLayer

logger = logging.getLogger(__name__)

TEMPLATE_DIR = Path(__file__).resolve().parent.parent / "templates" / "verilog"
TOP_MODULE = "LogicNetModule"
MANIFEST = "files.f"


@lru_cache()
def get_environment() -> Environment:
    return Environment(
        loader=FileSystemLoader(str(TEMPLATE_DIR)),
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
        undefined=StrictUndefined,
        autoescape=False,
    )


def neuron_module_name(layer: int, neuron: int) -> str:
    return f"LUT_L{layer}_N{neuron}"


def layer_module_name(layer: int) -> str:
    return f"LUTLayer{layer}"


def concat(names: List[str]) -> str:
    return names[0] if len(names) == 1 else "{" + ", ".join(names) + "}"


def render_neuron(layer: int, node) -> str:
    rows = [code_to_bits(int(code), node.out_bit_width) for code in node.table]
    return get_environment().get_template("neuron.v.j2").render(
        name=neuron_module_name(layer, node.neuron),
        in_bits=node.in_bits,
        out_bits=node.out_bit_width,
        rows=rows,
    )


def render_layer(layer: NetlistLayer) -> str:
    nodes = [
        {
            "neuron": node.neuron,
            "in_bits": node.in_bits,
            "concat": "{" + ", ".join(f"M0[{bit}]" for bit in node.selection) + "}",
            "out_hi": node.out_hi,
            "out_lo": node.out_lo,
        }
        for node in layer.nodes
    ]
    return get_environment().get_template("layer.v.j2").render(
        index=layer.index,
        in_width=layer.input_width,
        out_width=layer.output_width,
        nodes=nodes,
    )


def _top_wiring(ir: NetlistIR) -> Tuple[List[str], List[dict], List[Tuple[str, str]], str]:
    last = ir.layers[-1].index
    declarations: List[str] = []
    instances: List[dict] = []
    registers: List[Tuple[str, str]] = []

    if not ir.pipelined:
        def source_name(dest: int, source: int) -> str:
            return "M0" if source < 0 else f"L{source}_out"

        for layer in ir.layers[:-1]:
            declarations.append(f"wire [{layer.output_width - 1}:0] L{layer.index}_out;")
    else:
        def source_name(dest: int, source: int) -> str:
            if source < 0:
                return "M0_reg"
            if source == dest - 1:
                return f"L{source}_reg"
            return f"L{source}_d{dest - source - 1}"

        declarations.append(f"reg [{ir.input_width - 1}:0] M0_reg;")
        registers.append(("M0_reg", "M0"))
        delays = ir.skip_delays()
        for layer in ir.layers:
            top = layer.output_width - 1
            declarations.append(f"wire [{top}:0] L{layer.index}_out;")
            declarations.append(f"reg [{top}:0] L{layer.index}_reg;")
            registers.append((f"L{layer.index}_reg", f"L{layer.index}_out"))
            previous = f"L{layer.index}_reg"
            for d in range(1, delays.get(layer.index, 0) + 1):
                declarations.append(f"reg [{top}:0] L{layer.index}_d{d};")
                registers.append((f"L{layer.index}_d{d}", previous))
                previous = f"L{layer.index}_d{d}"

    for layer in ir.layers:
        names = [source_name(layer.index, s) for s in reversed(layer.sources)]
        output = "M1" if layer.index == last and not ir.pipelined else f"L{layer.index}_out"
        instances.append({"index": layer.index, "input": concat(names), "output": output})
    return declarations, instances, registers, f"L{last}_reg"


def render_top(ir: NetlistIR) -> str:
    declarations, instances, registers, result = _top_wiring(ir)
    return get_environment().get_template("top.v.j2").render(
        pipelined=ir.pipelined,
        in_width=ir.input_width,
        out_width=ir.output_width,
        declarations=declarations,
        instances=instances,
        registers=registers,
        result=result,
    )


def emit_verilog(ir: NetlistIR) -> Dict[str, str]:
    """Source files keyed by file name, in dependency order, plus the files.f manifest."""
    files: Dict[str, str] = {}
    for layer in ir.layers:
        for node in layer.nodes:
            files[f"{neuron_module_name(layer.index, node.neuron)}.v"] = render_neuron(layer.index, node)
    for layer in ir.layers:
        files[f"{layer_module_name(layer.index)}.v"] = render_layer(layer)
    files[f"{TOP_MODULE}.v"] = render_top(ir)
    files[MANIFEST] = get_environment().get_template("files.f.j2").render(sources=list(files))
    return files


def write_verilog(files: Dict[str, str], out_dir: Union[str, Path]) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in files.items():
        path = out_dir / name
        path.write_text(text, encoding="utf-8", newline="\n")
        paths.append(path)
    logger.info("Wrote %d Verilog sources and %s to %s", len(files) - 1, MANIFEST, out_dir)
    return paths
