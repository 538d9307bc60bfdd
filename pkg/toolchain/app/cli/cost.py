import logging

from ..services import load_config, load_model, report
from .base import RunConfig, UsageError, print_json

logger = logging.getLogger(__name__)

NAME = "cost"
HELP = "analytical 6:1 LUT cost per layer"


def run(config: RunConfig) -> int:
    """Print the LutCostReport of a topology config or a trained model."""
    if config.config is not None:
        spec, _ = load_config(config.config)
    elif config.model is not None:
        spec = load_model(config.model).topology
    else:
        raise UsageError("cost needs --config or --model")
    cost = report(spec)
    if config.json_output:
        print_json(cost.model_dump(mode="json"))
        return 0
    print(f"{'layer':>5}  {'kind':<18} {'neurons':>7} {'fan-in bits':>11} {'out bits':>8} {'LUTs':>12}")
    for layer in cost.layers:
        print(
            f"{layer.index:>5}  {layer.kind:<18} {layer.neurons:>7} {layer.fan_in_bits:>11} "
            f"{layer.out_bits:>8} {layer.luts:>12.6g}"
        )
        for part, luts in layer.breakdown.items():
            print(f"{'':>5}    {part:<16} {luts:>50.6g}")
    print(f"{'total':>5}  {cost.total:>61.6g}")
    return 0
