from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import ClassVar, List, Optional, Tuple

import numpy as np
import torch

from ..errors import DimensionMismatchError
from ..models import BatchNormParams, LayerSpec, LayerState, StageState, TopologySpec
from ..quant import QuantizerParams, codes, values_from_codes

DTYPE = torch.float64


@dataclass(frozen=True)
class BatchNorm:
    """Inference-mode batch normalization over running statistics."""

    gamma: torch.Tensor
    beta: torch.Tensor
    mean: torch.Tensor
    denom: torch.Tensor

    @classmethod
    def from_params(cls, params: BatchNormParams) -> "BatchNorm":
        var = torch.tensor(params.running_var, dtype=DTYPE)
        return cls(
            gamma=torch.tensor(params.gamma, dtype=DTYPE),
            beta=torch.tensor(params.beta, dtype=DTYPE),
            mean=torch.tensor(params.running_mean, dtype=DTYPE),
            denom=torch.sqrt(var + params.eps),
        )

    def apply(self, acc: torch.Tensor) -> torch.Tensor:
        """Normalize accumulators whose last axis runs over neurons."""
        return (acc - self.mean) / self.denom * self.gamma + self.beta

    def apply_neuron(self, acc: torch.Tensor, n: int) -> torch.Tensor:
        return (acc - self.mean[n]) / self.denom[n] * self.gamma[n] + self.beta[n]


def accumulate(taps: torch.Tensor, values: torch.Tensor) -> torch.Tensor:
    """
    Sum taps[..., j] * values[..., j] over j in ascending order.

    An explicit loop of elementwise operations fixes the summation order, so a
    batched forward and a per-neuron tabulation produce identical bits.
    """
    acc = torch.zeros(values.shape[:-1], dtype=DTYPE)
    for j in range(values.shape[-1]):
        acc = acc + taps[..., j] * values[..., j]
    return acc


class LinearStage:
    """
    Neurons that read a fixed subset of a shared input through one quantizer
    and write through another; the unit a truth table is built for.
    """

    def __init__(
        self,
        state: StageState,
        input_quantizer: QuantizerParams,
        output_quantizer: QuantizerParams,
    ):
        self.weights = torch.tensor(state.weights, dtype=DTYPE)
        self.mask = torch.tensor(state.mask, dtype=torch.int64).reshape(len(state.mask), -1)
        self.taps = self.weights.gather(1, self.mask)
        self.batchnorm = BatchNorm.from_params(state.batchnorm)
        self.input_quantizer = input_quantizer
        self.output_quantizer = output_quantizer

    @property
    def neurons(self) -> int:
        return self.mask.shape[0]

    @property
    def fan_in(self) -> int:
        return self.mask.shape[1]

    @property
    def width(self) -> int:
        return self.weights.shape[1]

    @property
    def fan_in_bits(self) -> int:
        return self.fan_in * self.input_quantizer.bit_width

    def preactivation(self, gathered: torch.Tensor) -> torch.Tensor:
        """gathered[..., n, j] is the value at mask[n][j]; returns [..., neurons]."""
        return self.batchnorm.apply(accumulate(self.taps, gathered))

    def neuron_preactivation(self, n: int, values: torch.Tensor) -> torch.Tensor:
        """values[r, j] is the value at mask[n][j] for row r."""
        return self.batchnorm.apply_neuron(accumulate(self.taps[n], values), n)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Dequantized inputs [batch, width] to pre-activations [batch, neurons]."""
        if x.shape[-1] != self.width:
            raise DimensionMismatchError(f"expected {self.width} input features, got {x.shape[-1]}")
        return self.preactivation(x[:, self.mask])

    def neuron_codes(self, n: int, field_codes: np.ndarray) -> np.ndarray:
        """Output codes of neuron n for input field codes [rows, fan_in]."""
        values = values_from_codes(torch.from_numpy(field_codes), self.input_quantizer)
        return codes(self.neuron_preactivation(n, values), self.output_quantizer).numpy()


class QuantLayer(ABC):
    """
    Inference form of one trained layer.

    Layers consume dequantized values of their input quantizer and return
    pre-activations; the caller applies the output quantizer.
    """

    kind: ClassVar[str]

    def __init__(self, topology: TopologySpec, index: int, state: LayerState):
        self.topology = topology
        self.index = index
        self.spec: LayerSpec = topology.layers[index]
        self.state = state

    @property
    def input_quantizer(self) -> QuantizerParams:
        return self.spec.input_quantizer

    @property
    def output_quantizer(self) -> QuantizerParams:
        return self.spec.output_quantizer

    @property
    def input_width(self) -> int:
        return self.topology.input_width(self.index)

    @property
    def output_width(self) -> int:
        return self.topology.output_width(self.index)

    @property
    def input_geometry(self) -> Optional[Tuple[int, int, int]]:
        return self.topology.input_geometry(self.index)

    @property
    @abstractmethod
    def stages(self) -> List[LinearStage]:
        """Tabulatable stages, in evaluation order."""

    @abstractmethod
    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Pre-activations [batch, output_width] for dequantized inputs [batch, input_width]."""

    def forward_codes(self, x_codes: np.ndarray) -> np.ndarray:
        """Encoded float forward: input codes to output codes."""
        x = values_from_codes(torch.from_numpy(np.ascontiguousarray(x_codes, dtype=np.int64)), self.input_quantizer)
        return codes(self.forward(x), self.output_quantizer).numpy()
