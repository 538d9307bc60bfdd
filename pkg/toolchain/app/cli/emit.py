import logging

from ..layers import QuantizedNetwork
from ..services import build_netlist, compilable_prefix, emit_verilog, generate_tables, load_model, write_verilog
from .base import RunConfig, print_json

logger = logging.getLogger(__name__)

NAME = "emit"
HELP = "write Verilog for the leading sparse_linear layers"


def run(config: RunConfig) -> int:
    """Tabulate, build the netlist and write one Verilog file per module plus files.f."""
    config.require("model")
    network = QuantizedNetwork(load_model(config.model))
    count = compilable_prefix(network)
    tables = generate_tables(network, count)
    ir = build_netlist(network, tables, config.style, count)
    if count < len(network):
        logger.warning("Layers %d..%d are not sparse_linear and are not emitted", count, len(network) - 1)
    files = emit_verilog(ir)
    paths = write_verilog(files, config.out)
    if config.json_output:
        print_json(
            {
                "out": str(config.out),
                "style": ir.style,
                "layers": count,
                "latency": ir.latency,
                "files": [p.name for p in paths],
            }
        )
    else:
        print(f"Wrote {len(paths)} files ({ir.style}, {count} layers, latency {ir.latency}) to {config.out}")
    return 0
