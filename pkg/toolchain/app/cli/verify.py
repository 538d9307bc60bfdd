import logging
from typing import Optional

import numpy as np

from ..errors import DatasetError
from ..layers import QuantizedNetwork
from ..models import ModelFile
from ..services import apply_normalization, fit_to_quantizer, load_model, load_normalization, verify
from ..services.data import Dataset
from .base import RunConfig, print_json
from .train import NORMALIZATION_FILE, load_dataset

logger = logging.getLogger(__name__)

NAME = "verify"
HELP = "check float, table and netlist paths agree bit for bit"


def _dataset_rows(config: RunConfig, model: ModelFile) -> Dataset:
    record = config.model.parent / NORMALIZATION_FILE
    # a stored record already folds in the training file's CSV statistics
    raw = record.exists()
    try:
        dataset = load_dataset(config, split="t10k", standardize=not raw)
    except DatasetError:
        dataset = load_dataset(config, split="train", standardize=not raw)
    if raw:
        dataset = apply_normalization(dataset, load_normalization(record))
    else:
        logger.warning("No %s next to the model; fitting the input scaling on the verification data", NORMALIZATION_FILE)
        dataset, _ = fit_to_quantizer(
            dataset, model.topology.layers[0].input_quantizer, per_feature=dataset.image_shape is None
        )
    return dataset.subset(np.arange(min(len(dataset), config.samples)))


def run(config: RunConfig) -> int:
    """Triple-equivalence check on --samples random inputs, plus dataset rows with --data-dir."""
    config.require("model")
    model = load_model(config.model)
    extra: Optional[np.ndarray] = None
    accuracy = None
    if config.data_dir is not None:
        rows = _dataset_rows(config, model)
        network = QuantizedNetwork(model)
        extra = network.encode(rows.features)
        accuracy = float((network.predict(rows.features) == rows.labels).mean())
        logger.info("Quantized model accuracy on %d dataset rows: %.4f", len(rows), accuracy)
    result = verify(model, config.samples, config.seed, config.style, extra_inputs=extra)
    summary = {**result.to_dict(), "seed": config.seed}
    if accuracy is not None:
        summary["dataset_accuracy"] = accuracy
    if config.json_output:
        print_json(summary)
    else:
        print(
            f"OK: {result.samples} samples agree over {result.layers_checked} of {result.layers_total} layers "
            f"({result.style}, latency {result.latency})"
        )
        if result.layers_tabulated > result.layers_checked:
            print(f"{result.layers_tabulated - result.layers_checked} further layers agree with their truth tables")
        if accuracy is not None:
            print(f"dataset accuracy: {accuracy:.4f}")
    return 0
