from pathlib import Path

import numpy as np
import pytest

from app.config import get_settings
from app.models import LayerSpec, ModelFile, TopologySpec
from app.services import init_model, load_model

REPO_ROOT = Path(__file__).resolve().parents[2]
CONFIG_DIR = REPO_ROOT / "configs"


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Every test sees default settings, whatever the developer's .env holds."""
    for name in ("LUTC_TABLE_GEN_LIMIT", "LUTC_WORKERS", "LUTC_DEFAULT_SEED", "LUTC_VERIFY_SAMPLES"):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def config_dir() -> Path:
    return CONFIG_DIR


@pytest.fixture
def three_neuron_model() -> ModelFile:
    return load_model(CONFIG_DIR / "three_neuron_model.json")


@pytest.fixture
def three_neuron_path() -> Path:
    return CONFIG_DIR / "three_neuron_model.json"


def sparse_layer(neurons, fan_in, in_bw, out_bw, max_in=2.0, max_out=2.0, **kwargs) -> LayerSpec:
    return LayerSpec(
        kind="sparse_linear",
        neurons=neurons,
        fan_in=fan_in,
        in_bit_width=in_bw,
        out_bit_width=out_bw,
        max_val_in=max_in,
        max_val_out=max_out,
        **kwargs,
    )


def conv_first_spec() -> TopologySpec:
    """6x6 image, one sparse conv layer then a sparse_linear layer on its 2x2x3 output."""
    return TopologySpec(
        layers=[
            LayerSpec(
                kind="sparse_conv", neurons=3, in_bit_width=2, out_bit_width=2, max_val_in=1.0, max_val_out=2.0,
                kernel_size=3, stride=3, kernel_fan_in=3, pointwise_fan_in=2, intermediate_bit_width=2,
                first_layer=True,
            ),
            sparse_layer(4, 3, 2, 2),
        ],
        input_features=36,
        input_bit_width=2,
        input_shape=(6, 6, 1),
    )


def random_topology(rng: np.random.Generator, max_layers: int = 3, skips: bool = True) -> TopologySpec:
    """1..max_layers sparse_linear layers, fan-in 2..4, bit widths 1..3, fan-in bits at most 12."""
    n_layers = int(rng.integers(1, max_layers + 1))
    input_features = int(rng.integers(4, 9))
    widths = [int(rng.integers(1, 4)) for _ in range(n_layers + 1)]
    ranges = [float(rng.choice([1.0, 2.0, 3.0])) for _ in range(n_layers + 1)]
    layers = []
    available = input_features
    for i in range(n_layers):
        fan_in = int(min(rng.integers(2, 5), available, 12 // widths[i]))
        neurons = int(rng.integers(2, 7))
        layers.append(sparse_layer(neurons, fan_in, widths[i], widths[i + 1], ranges[i], ranges[i + 1]))
        available = neurons
    links = []
    if skips and n_layers == 3 and widths[1] == widths[2] and ranges[1] == ranges[2] and rng.random() < 0.5:
        links = [(0, 2)]
    return TopologySpec(
        layers=layers,
        input_features=input_features,
        input_bit_width=widths[0],
        seed=int(rng.integers(0, 2 ** 31)),
        skip_links=links,
    )


@pytest.fixture
def make_random_model():
    """Factory of random sparse_linear models with random batch-norm statistics."""

    def make(seed: int, **kwargs) -> ModelFile:
        rng = np.random.default_rng(seed)
        spec = random_topology(rng, **kwargs)
        return init_model(spec, seed)

    return make


@pytest.fixture
def out_dir(tmp_path) -> Path:
    path = tmp_path / "build"
    path.mkdir()
    return path
