"""
Trainable counterparts of the inference layers.

Weights are dense parameters whose off-mask entries are held at exactly
zero; the forward pass reads them directly, so `weight.grad` is the dense
gradient that momentum regrowth scores candidate connections with.
"""
import math
from typing import Callable, Iterator, List, Optional, Tuple

import torch
from torch import nn

from ..errors import UnsupportedLayerError
from ..layers import conv_window_index
from ..models import BatchNormParams, LayerSpec, LayerState, ModelFile, StageState, TopologySpec
from ..quant import QuantizerParams, fake_quantize, fake_quantize_weights, quantize_weights, surrogate
from ..services.masks import ConnectivityMask
from ..services.model_init import layer_quantizers

BN_EPS = 1e-5
BN_MOMENTUM = 0.1

QuantFn = Callable[[torch.Tensor, QuantizerParams], torch.Tensor]


class MaskedWeight(nn.Module):
    """Weight matrix [neurons, width] with a 0/1 connectivity mask buffer."""

    def __init__(self, weight: torch.Tensor, mask: torch.Tensor, fan_in: Optional[int], prunable: bool = True):
        super().__init__()
        self.register_buffer("mask", mask.to(weight.dtype))
        self.weight = nn.Parameter(weight * self.mask)
        self.fan_in = fan_in  # target support per neuron; None for dense layers
        self.prunable = prunable

    @classmethod
    def from_stage(cls, stage: StageState, fan_in: Optional[int], prunable: bool = True, dense: bool = False):
        weight = torch.tensor(stage.weights, dtype=torch.float32)
        mask = torch.zeros_like(weight)
        if dense:
            mask.fill_(1.0)
        else:
            for n, row in enumerate(stage.mask):
                mask[n, row] = 1.0
        return cls(weight, mask, fan_in, prunable)

    @property
    def width(self) -> int:
        return self.weight.shape[1]

    def support_sizes(self) -> torch.Tensor:
        return self.mask.sum(dim=1).to(torch.int64)

    def set_mask(self, mask: torch.Tensor) -> None:
        self.mask.copy_(mask)
        self.apply_mask()

    @torch.no_grad()
    def apply_mask(self) -> None:
        self.weight.mul_(self.mask)

    @torch.no_grad()
    def mask_grad(self) -> None:
        if self.weight.grad is not None:
            self.weight.grad.mul_(self.mask)

    def rows(self) -> List[List[int]]:
        return [torch.nonzero(row).flatten().tolist() for row in self.mask]

    def to_stage(self, batchnorm: BatchNormParams, weights: Optional[torch.Tensor] = None) -> StageState:
        weights = self.weight.detach() if weights is None else weights
        return StageState(
            weights=(weights.to(torch.float64) * self.mask.to(torch.float64)).tolist(),
            mask=self.rows(),
            batchnorm=batchnorm,
        )


def _batchnorm(spec: LayerSpec, params: BatchNormParams) -> Optional[nn.BatchNorm1d]:
    if not spec.batchnorm:
        return None
    bn = nn.BatchNorm1d(len(params), eps=BN_EPS, momentum=BN_MOMENTUM)
    with torch.no_grad():
        bn.weight.copy_(torch.tensor(params.gamma))
        bn.bias.copy_(torch.tensor(params.beta))
        bn.running_mean.copy_(torch.tensor(params.running_mean))
        bn.running_var.copy_(torch.tensor(params.running_var))
    return bn


def _export_batchnorm(bn: Optional[nn.BatchNorm1d], n: int) -> BatchNormParams:
    if bn is None:
        return BatchNormParams.identity(n)
    return BatchNormParams(
        gamma=bn.weight.detach().double().tolist(),
        beta=bn.bias.detach().double().tolist(),
        running_mean=bn.running_mean.double().tolist(),
        running_var=bn.running_var.double().tolist(),
        eps=bn.eps,
    )


def _normalize(bn: Optional[nn.BatchNorm1d], y: torch.Tensor) -> torch.Tensor:
    if bn is None:
        return y
    shape = y.shape
    return bn(y.reshape(-1, shape[-1])).reshape(shape)


def _redraw(weight: MaskedWeight, generator: torch.Generator) -> None:
    """Dense re-initialization, normal with std 1/sqrt(width)."""
    with torch.no_grad():
        fresh = torch.randn(weight.weight.shape, generator=generator) / math.sqrt(weight.width)
        weight.weight.copy_(fresh.to(weight.weight.dtype) * weight.mask)


class TrainableLayer(nn.Module):
    """Returns pre-activations; the network applies the output quantizer."""

    def __init__(self, spec: LayerSpec):
        super().__init__()
        self.spec = spec

    def masked_weights(self) -> Iterator[Tuple[str, MaskedWeight]]:
        raise NotImplementedError

    def export(self, topology: TopologySpec, index: int) -> LayerState:
        raise NotImplementedError


class TrainableLinear(TrainableLayer):
    """sparse_linear and dense_quant_linear."""

    def __init__(self, spec: LayerSpec, state: LayerState, dense_mask: bool = False):
        super().__init__(spec)
        sparse = spec.kind == "sparse_linear"
        self.weight = MaskedWeight.from_stage(
            state.stage, spec.fan_in if sparse else None, prunable=sparse, dense=dense_mask and sparse
        )
        self.batchnorm = _batchnorm(spec, state.batchnorm)

    def masked_weights(self) -> Iterator[Tuple[str, MaskedWeight]]:
        yield "linear", self.weight

    def effective_weight(self) -> torch.Tensor:
        w = self.weight.weight
        if self.spec.kind == "dense_quant_linear":
            return fake_quantize_weights(w, self.spec.weight_bit_width)
        return w

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return _normalize(self.batchnorm, x @ self.effective_weight().t())

    def export(self, topology: TopologySpec, index: int) -> LayerState:
        n = self.spec.neurons
        weights, scale = None, None
        if self.spec.kind == "dense_quant_linear":
            q = quantize_weights(self.weight.weight.detach().to(torch.float64), self.spec.weight_bit_width)
            weights, scale = q.values, q.scale
        stage = self.weight.to_stage(_export_batchnorm(self.batchnorm, n), weights)
        return LayerState(
            kind=self.spec.kind,
            weights=stage.weights,
            mask=stage.mask,
            batchnorm=stage.batchnorm,
            quantizer=layer_quantizers(topology, index, scale),
        )


class TrainableConv(TrainableLayer):
    """Sparse depthwise-separable convolution over HWC row-major features."""

    def __init__(self, spec: LayerSpec, state: LayerState, topology: TopologySpec, index: int, dense_mask: bool = False):
        super().__init__(spec)
        if state.pointwise is None:
            raise UnsupportedLayerError(f"layer {index}: sparse_conv state without pointwise stage")
        height, width, channels = topology.input_geometry(index)
        depthwise_channels = topology.depthwise_channels(index)
        self.register_buffer(
            "window",
            conv_window_index(height, width, channels, spec.kernel_size, spec.stride, depthwise_channels),
        )
        self.depthwise = MaskedWeight.from_stage(state.stage, spec.kernel_fan_in, dense=dense_mask)
        self.pointwise = MaskedWeight.from_stage(state.pointwise, spec.pointwise_fan_in, dense=dense_mask)
        self.depthwise_bn = _batchnorm(spec, state.batchnorm)
        self.pointwise_bn = _batchnorm(spec, state.pointwise.batchnorm)
        self.intermediate = spec.intermediate_quantizer
        self.quant_fn: QuantFn = fake_quantize

    def masked_weights(self) -> Iterator[Tuple[str, MaskedWeight]]:
        yield "depthwise", self.depthwise
        yield "pointwise", self.pointwise

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        windows = x[:, self.window]  # [batch, pixels, kernels, k*k]
        dw = _normalize(self.depthwise_bn, (windows * self.depthwise.weight).sum(dim=-1))
        inter = self.quant_fn(dw, self.intermediate)
        pt = _normalize(self.pointwise_bn, inter @ self.pointwise.weight.t())
        return pt.reshape(x.shape[0], -1)

    def export(self, topology: TopologySpec, index: int) -> LayerState:
        depthwise = self.depthwise.to_stage(_export_batchnorm(self.depthwise_bn, self.depthwise.weight.shape[0]))
        pointwise = self.pointwise.to_stage(_export_batchnorm(self.pointwise_bn, self.spec.neurons))
        return LayerState(
            kind=self.spec.kind,
            weights=depthwise.weights,
            mask=depthwise.mask,
            batchnorm=depthwise.batchnorm,
            quantizer=layer_quantizers(topology, index),
            pointwise=pointwise,
        )


class TrainableNetwork(nn.Module):
    """
    Training form of a model: fake quantizers between layers, straight-through
    gradients, and the final layer's pre-activations as logits.
    """

    def __init__(
        self,
        model: ModelFile,
        dense_masks: bool = False,
        generator: Optional[torch.Generator] = None,
    ):
        super().__init__()
        self.topology = model.topology
        layers: List[TrainableLayer] = []
        for i, (spec, state) in enumerate(zip(self.topology.layers, model.layers)):
            if spec.kind == "sparse_conv":
                layers.append(TrainableConv(spec, state, self.topology, i, dense_mask=dense_masks))
            else:
                layers.append(TrainableLinear(spec, state, dense_mask=dense_masks))
        self.layers = nn.ModuleList(layers)
        self.quant_fn: QuantFn = fake_quantize
        if dense_masks:
            generator = generator or torch.Generator().manual_seed(self.topology.seed)
            for _, _, weight in self.masked_weights():
                if weight.prunable:
                    _redraw(weight, generator)

    def use_surrogate(self) -> "TrainableNetwork":
        """Replace every quantizer by its clipped-identity surrogate (for gradient checks)."""
        self.quant_fn = surrogate
        for layer in self.layers:
            if isinstance(layer, TrainableConv):
                layer.quant_fn = surrogate
        return self

    def masked_weights(self) -> Iterator[Tuple[int, str, MaskedWeight]]:
        for i, layer in enumerate(self.layers):
            for name, weight in layer.masked_weights():
                yield i, name, weight

    def prunable_weights(self) -> List[MaskedWeight]:
        return [w for _, _, w in self.masked_weights() if w.prunable]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        first = self.topology.layers[0].input_quantizer
        x = self.quant_fn(x, first)
        outputs: List[torch.Tensor] = []
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            parts = [x if p < 0 else outputs[p] for p in self.topology.producers(i)]
            pre = layer(parts[0] if len(parts) == 1 else torch.cat(parts, dim=1))
            outputs.append(pre if i == last else self.quant_fn(pre, layer.spec.output_quantizer))
        return outputs[-1]

    def mask_gradients(self) -> None:
        for _, _, weight in self.masked_weights():
            weight.mask_grad()

    def apply_masks(self) -> None:
        for _, _, weight in self.masked_weights():
            weight.apply_mask()

    def fan_in_summary(self) -> str:
        """`L<i>:min/mean/max` of each layer's primary support sizes, joined by ';'."""
        parts = []
        for i, layer in enumerate(self.layers):
            _, weight = next(iter(layer.masked_weights()))
            sizes = weight.support_sizes().double()
            parts.append(f"L{i}:{int(sizes.min())}/{float(sizes.mean()):.2f}/{int(sizes.max())}")
        return ";".join(parts)

    def to_model(self) -> ModelFile:
        return ModelFile(
            topology=self.topology,
            layers=[layer.export(self.topology, i) for i, layer in enumerate(self.layers)],
        )
