from typing import List, Tuple

import torch

from ..errors import DimensionMismatchError, ModelFormatError
from ..models import LayerState, TopologySpec, conv_output_size
from ..quant import QuantTensor, codes, quantize, values_from_codes
from .base import DTYPE, LinearStage, QuantLayer


def conv_window_index(
    height: int, width: int, channels: int, kernel_size: int, stride: int, depthwise_channels: int
) -> torch.Tensor:
    """Flat HWC input index for [output pixel, depthwise kernel, kernel position]."""
    k = kernel_size
    position = torch.arange(k * k)
    dy, dx = position // k, position % k
    if depthwise_channels == channels:
        channel = torch.arange(depthwise_channels)
    else:
        channel = torch.zeros(depthwise_channels, dtype=torch.int64)
    rows = []
    for r in range(conv_output_size(height, k, stride)):
        for c in range(conv_output_size(width, k, stride)):
            y0, x0 = r * stride, c * stride
            pixel = (y0 + dy) * width + (x0 + dx)
            rows.append(pixel.unsqueeze(0) * channels + channel.unsqueeze(1))
    return torch.stack(rows)


class SparseConvLayer(QuantLayer):
    """
    Sparse depthwise-separable convolution.

    Depthwise k x k kernels with X_k taps each, batch norm and the
    intermediate quantizer, then 1 x 1 pointwise kernels with X_s channel taps
    each and batch norm. Features are HWC row-major; convolution is valid-only.
    """

    kind = "sparse_conv"

    def __init__(self, topology: TopologySpec, index: int, state: LayerState):
        super().__init__(topology, index, state)
        if state.pointwise is None:
            raise ModelFormatError(f"layer {index}: sparse_conv without pointwise stage")
        self.kernel_size = self.spec.kernel_size
        self.stride = self.spec.stride
        self.height, self.width, self.channels = self.input_geometry
        self.out_height = conv_output_size(self.height, self.kernel_size, self.stride)
        self.out_width = conv_output_size(self.width, self.kernel_size, self.stride)
        self.intermediate_quantizer = state.quantizer.intermediate
        self.depthwise = LinearStage(state.stage, self.input_quantizer, self.intermediate_quantizer)
        self.pointwise = LinearStage(state.pointwise, self.intermediate_quantizer, self.output_quantizer)
        self.gather_index = self._gather_index()

    @property
    def stages(self) -> List[LinearStage]:
        return [self.depthwise, self.pointwise]

    @property
    def depthwise_channels(self) -> int:
        return self.depthwise.neurons

    @property
    def feature_maps(self) -> int:
        return self.pointwise.neurons

    def source_channel(self, d: int) -> int:
        """Input channel read by depthwise kernel d."""
        return 0 if self.depthwise_channels != self.channels else d

    def window_origin(self, r: int, c: int) -> Tuple[int, int]:
        return r * self.stride, c * self.stride

    def _gather_index(self) -> torch.Tensor:
        """Flat input feature index for [output pixel, depthwise kernel, tap]."""
        full = conv_window_index(
            self.height, self.width, self.channels, self.kernel_size, self.stride, self.depthwise_channels
        )
        taps = self.depthwise.mask.unsqueeze(0).expand(full.shape[0], -1, -1)
        return full.gather(2, taps)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x.to(DTYPE)
        if x.shape[-1] != self.height * self.width * self.channels:
            raise DimensionMismatchError(
                f"layer {self.index} expects a {self.height}x{self.width}x{self.channels} image, "
                f"got {x.shape[-1]} features"
            )
        dw = self.depthwise.preactivation(x[:, self.gather_index])
        inter = values_from_codes(codes(dw, self.intermediate_quantizer), self.intermediate_quantizer)
        pt = self.pointwise.preactivation(inter[..., self.pointwise.mask])
        return pt.reshape(x.shape[0], -1)


def forward_sparse_conv(layer: SparseConvLayer, image: QuantTensor, H: int, W: int, C: int) -> QuantTensor:
    if (H, W, C) != (layer.height, layer.width, layer.channels):
        raise DimensionMismatchError(
            f"image {H}x{W}x{C} does not match layer input {layer.height}x{layer.width}x{layer.channels}"
        )
    if H < layer.kernel_size or W < layer.kernel_size:
        raise DimensionMismatchError(f"image {H}x{W} smaller than kernel {layer.kernel_size}")
    return quantize(layer.forward(image.values), layer.output_quantizer)
