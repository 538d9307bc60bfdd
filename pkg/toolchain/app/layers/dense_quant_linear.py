from typing import List

import torch

from ..errors import ModelFormatError
from ..models import LayerState, TopologySpec
from ..quant import QuantTensor, weight_codes
from .base import DTYPE, LinearStage, QuantLayer


class DenseQuantLinearLayer(QuantLayer):
    """
    Input quantizer, fully connected layer with weights on a signed
    BW_wt-bit grid, and batch normalization.

    Every neuron reads the whole input, so the layer tabulates like a sparse
    layer with fan-in equal to the input width when that fits the limit.
    """

    kind = "dense_quant_linear"

    def __init__(self, topology: TopologySpec, index: int, state: LayerState):
        super().__init__(topology, index, state)
        self.weight_bit_width = self.spec.weight_bit_width
        self.weight_scale = state.quantizer.weight_scale
        if self.weight_scale is None or self.weight_scale <= 0:
            raise ModelFormatError(f"layer {index}: dense_quant_linear without a positive weight_scale")
        self.stage = LinearStage(state.stage, self.input_quantizer, self.output_quantizer)
        self._check_grid()

    def _check_grid(self) -> None:
        w = self.stage.weights
        c = weight_codes(w, self.weight_bit_width, self.weight_scale)
        if not torch.allclose(c.to(DTYPE) * self.weight_scale, w, rtol=1e-9, atol=1e-12):
            raise ModelFormatError(
                f"layer {self.index}: weights are not on the {self.weight_bit_width}-bit grid "
                f"with step {self.weight_scale}"
            )

    @property
    def stages(self) -> List[LinearStage]:
        return [self.stage]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.stage.forward(x.to(DTYPE))


def forward_dense_quant_linear(layer: DenseQuantLinearLayer, x: QuantTensor) -> torch.Tensor:
    return layer.forward(x.values)
