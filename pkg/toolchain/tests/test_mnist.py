from pathlib import Path

import numpy as np
import pytest

from app.config import get_settings
from app.layers import QuantizedNetwork
from app.services import apply_normalization, init_model, load_config, load_mnist_dir, verify
from app.training import train

MNIST_DIR = get_settings().mnist_dir

pytestmark = [
    pytest.mark.slow,
    pytest.mark.skipif(not MNIST_DIR, reason="set LUTC_MNIST_DIR (environment or .env) to an MNIST IDX directory"),
]


def test_mnist_512_reaches_ninety_percent(config_dir):
    spec, config = load_config(config_dir / "mnist_512.json")
    train_set = load_mnist_dir(Path(MNIST_DIR), "train")
    test_set = load_mnist_dir(Path(MNIST_DIR), "t10k")
    result = train(init_model(spec, 0, random_batchnorm=False), train_set, config, seed=0)

    network = QuantizedNetwork(result.model)
    rows = apply_normalization(test_set, result.normalization)
    accuracy = float((network.predict(rows.features) == rows.labels).mean())
    assert accuracy >= 0.90

    sample = rows.subset(np.arange(200))
    report = verify(result.model, samples=1000, seed=0, extra_inputs=network.encode(sample.features))
    assert report.layers_checked == 1
    assert report.samples == 1200
