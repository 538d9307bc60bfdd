import logging

from ..errors import DatasetError
from ..services import (
    init_model,
    load_config,
    load_csv,
    load_mnist_dir,
    save_model,
    save_normalization,
    stored_normalization,
)
from ..services.data import Dataset
from ..training import train
from .base import RunConfig, print_json

logger = logging.getLogger(__name__)

NAME = "train"
HELP = "train a model from a topology config"

MODEL_FILE = "model.json"
METRICS_FILE = "metrics.csv"
NORMALIZATION_FILE = "normalization.json"


def load_dataset(config: RunConfig, split: str = "train", standardize: bool = True) -> Dataset:
    path = config.data_dir
    if path.is_file():
        if path.suffix.lower() != ".csv":
            raise DatasetError(f"{path}: expected a CSV file or an MNIST directory")
        return load_csv(path, config.label_column, standardize)
    return load_mnist_dir(path, split)


def run(config: RunConfig) -> int:
    """Train from --config on --data-dir; writes model.json, metrics.csv and normalization.json."""
    config.require("config", "data_dir")
    spec, train_config = load_config(config.config)
    dataset = load_dataset(config)
    model = init_model(spec, config.seed, random_batchnorm=False)
    result = train(model, dataset, train_config, config.seed, config.out / METRICS_FILE)
    save_model(result.model, config.out / MODEL_FILE)
    save_normalization(stored_normalization(dataset, result.normalization), config.out / NORMALIZATION_FILE)
    if config.json_output:
        print_json(
            {
                "model": str(config.out / MODEL_FILE),
                "metrics": str(config.out / METRICS_FILE),
                "epochs": len(result.metrics),
                "accuracy": result.final_accuracy,
            }
        )
    else:
        print(f"Trained {len(result.metrics)} epochs, accuracy {result.final_accuracy:.4f}; model in {config.out / MODEL_FILE}")
    return 0
