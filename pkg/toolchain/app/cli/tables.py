import logging

from ..errors import TableGenLimitError
from ..layers import QuantizedNetwork
from ..services import generate_truth_table, load_model, save_tables
from ..services.tablegen import table_path
from .base import RunConfig, print_json

logger = logging.getLogger(__name__)

NAME = "tables"
HELP = "generate per-layer truth tables as JSON"


def run(config: RunConfig) -> int:
    """Tabulate every layer whose fan-in fits the limit; the rest are skipped with a warning."""
    config.require("model")
    network = QuantizedNetwork(load_model(config.model))
    tables, summary = [], []
    for layer in network.layers:
        entry = {
            "layer": layer.index,
            "kind": layer.kind,
            "fan_in_bits": max(stage.fan_in_bits for stage in layer.stages),
        }
        try:
            tables.append(generate_truth_table(layer))
            entry["file"] = str(table_path(config.out, layer.index))
        except TableGenLimitError as e:
            logger.warning("Skipping layer %d: %s", layer.index, e.message)
            entry["file"] = None
        summary.append(entry)
    save_tables(tables, config.out)
    if config.json_output:
        print_json({"out": str(config.out), "layers": summary})
    else:
        for entry in summary:
            status = entry["file"] or "skipped (fan-in above the table limit)"
            print(f"layer {entry['layer']} ({entry['kind']}, {entry['fan_in_bits']} fan-in bits): {status}")
    return 0
