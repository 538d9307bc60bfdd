from typing import List

import torch

from ..models import LayerState, TopologySpec
from ..quant import QuantTensor
from .base import DTYPE, LinearStage, QuantLayer


class SparseLinearLayer(QuantLayer):
    """Input quantizer, fixed fan-in linear map and batch normalization."""

    kind = "sparse_linear"

    def __init__(self, topology: TopologySpec, index: int, state: LayerState):
        super().__init__(topology, index, state)
        self.stage = LinearStage(state.stage, self.input_quantizer, self.output_quantizer)

    @property
    def stages(self) -> List[LinearStage]:
        return [self.stage]

    @property
    def mask(self) -> torch.Tensor:
        return self.stage.mask

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.stage.forward(x.to(DTYPE))


def forward_sparse_linear(layer: SparseLinearLayer, x: QuantTensor) -> torch.Tensor:
    return layer.forward(x.values)
