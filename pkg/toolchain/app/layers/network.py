import logging
from typing import Callable, List, Optional, Sequence

import numpy as np
import torch

from ..errors import DimensionMismatchError
from ..models import ModelFile, TopologySpec
from ..quant import codes, values_from_codes
from .base import DTYPE, QuantLayer
from .registry import LayerRegistry, layer_registry

logger = logging.getLogger(__name__)

LayerStep = Callable[[int, np.ndarray], np.ndarray]


def assemble_input(
    topology: TopologySpec, i: int, x_codes: np.ndarray, outputs: Sequence[np.ndarray]
) -> np.ndarray:
    """Concatenate the codes layer i reads: previous layer first, then skip sources ascending."""
    parts = [x_codes if p < 0 else outputs[p] for p in topology.producers(i)]
    return parts[0] if len(parts) == 1 else np.concatenate(parts, axis=1)


def run_layers(
    topology: TopologySpec, x_codes: np.ndarray, step: LayerStep, count: Optional[int] = None
) -> List[np.ndarray]:
    """Chain a per-layer code transform through the topology, returning every layer's output codes."""
    x_codes = np.asarray(x_codes, dtype=np.int64)
    if x_codes.ndim != 2 or x_codes.shape[1] != topology.input_features:
        raise DimensionMismatchError(
            f"expected input codes of shape [batch, {topology.input_features}], got {list(x_codes.shape)}"
        )
    outputs: List[np.ndarray] = []
    for i in range(len(topology.layers) if count is None else count):
        outputs.append(step(i, assemble_input(topology, i, x_codes, outputs)))
    return outputs


class QuantizedNetwork:
    """Inference form of a trained model, evaluated on quantizer codes."""

    def __init__(self, model: ModelFile, registry: LayerRegistry = layer_registry):
        self.model = model
        self.topology = model.topology
        self.layers: List[QuantLayer] = [
            registry.create(self.topology, i, state) for i, state in enumerate(model.layers)
        ]

    @property
    def input_quantizer(self):
        return self.topology.layers[0].input_quantizer

    def __len__(self) -> int:
        return len(self.layers)

    def encode(self, features: np.ndarray) -> np.ndarray:
        """Quantize real-valued features to first-layer input codes."""
        x = torch.as_tensor(np.asarray(features), dtype=DTYPE)
        return codes(x, self.input_quantizer).numpy()

    def forward_codes(self, x_codes: np.ndarray, count: Optional[int] = None) -> List[np.ndarray]:
        """Encoded float forward; returns the output codes of every evaluated layer."""
        return run_layers(
            self.topology, x_codes, lambda i, x: self.layers[i].forward_codes(x), count
        )

    def output_codes(self, x_codes: np.ndarray, count: Optional[int] = None) -> np.ndarray:
        return self.forward_codes(x_codes, count)[-1]

    def logits(self, x_codes: np.ndarray) -> torch.Tensor:
        """Pre-activations of the final layer."""
        outputs = self.forward_codes(x_codes, len(self.layers) - 1)
        last = len(self.layers) - 1
        x = assemble_input(self.topology, last, np.asarray(x_codes, dtype=np.int64), outputs)
        layer = self.layers[last]
        return layer.forward(values_from_codes(torch.from_numpy(x), layer.input_quantizer))

    def predict(self, features: np.ndarray) -> np.ndarray:
        return self.logits(self.encode(features)).argmax(dim=1).numpy()
