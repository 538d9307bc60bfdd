from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from ..errors import InvalidSpecError
from ..quant import QuantizerParams

LayerKind = Literal["sparse_linear", "dense_quant_linear", "sparse_conv"]
SPARSE_KINDS = ("sparse_linear", "sparse_conv")


class LayerSpec(BaseModel):
    """One layer of a declarative topology."""

    kind: LayerKind
    neurons: int = Field(ge=1)  # output feature maps for sparse_conv
    fan_in: Optional[int] = Field(default=None, ge=1)
    in_bit_width: int = Field(ge=1)
    out_bit_width: int = Field(ge=1)
    max_val_in: float = Field(gt=0)
    max_val_out: float = Field(gt=0)
    batchnorm: bool = True

    # dense_quant_linear
    weight_bit_width: Optional[int] = Field(default=None, ge=2)

    # sparse_conv
    kernel_size: Optional[int] = Field(default=None, ge=1)
    stride: int = Field(default=1, ge=1)
    kernel_fan_in: Optional[int] = Field(default=None, ge=1)  # X_k
    pointwise_fan_in: Optional[int] = Field(default=None, ge=1)  # X_s
    intermediate_bit_width: Optional[int] = Field(default=None, ge=1)
    max_val_intermediate: Optional[float] = Field(default=None, gt=0)
    first_layer: bool = False

    class Config:
        frozen = True
        extra = "forbid"

    @property
    def input_quantizer(self) -> QuantizerParams:
        return QuantizerParams(bit_width=self.in_bit_width, max_val=self.max_val_in)

    @property
    def output_quantizer(self) -> QuantizerParams:
        return QuantizerParams(bit_width=self.out_bit_width, max_val=self.max_val_out)

    @property
    def intermediate_quantizer(self) -> QuantizerParams:
        return QuantizerParams(
            bit_width=self.intermediate_bit_width,
            max_val=self.max_val_intermediate or self.max_val_in,
        )

    @model_validator(mode="after")
    def _check_kind_fields(self) -> "LayerSpec":
        if self.kind == "sparse_linear" and self.fan_in is None:
            raise InvalidSpecError("sparse_linear layer needs a fan_in")
        if self.kind == "dense_quant_linear" and self.weight_bit_width is None:
            raise InvalidSpecError("dense_quant_linear layer needs a weight_bit_width")
        if self.kind == "sparse_conv":
            missing = [
                name
                for name in ("kernel_size", "kernel_fan_in", "pointwise_fan_in", "intermediate_bit_width")
                if getattr(self, name) is None
            ]
            if missing:
                raise InvalidSpecError(f"sparse_conv layer is missing {', '.join(missing)}")
            if self.kernel_fan_in > self.kernel_size ** 2:
                raise InvalidSpecError(
                    f"kernel_fan_in {self.kernel_fan_in} exceeds kernel area {self.kernel_size ** 2}"
                )
        return self


class TopologySpec(BaseModel):
    """Declarative layered network description."""

    layers: List[LayerSpec] = Field(min_length=1)
    input_features: int = Field(ge=1)
    input_bit_width: int = Field(ge=1)
    seed: int = 0
    skip_links: List[Tuple[int, int]] = Field(default_factory=list)
    input_shape: Optional[Tuple[int, int, int]] = None  # H, W, C

    class Config:
        frozen = True
        extra = "forbid"

    @model_validator(mode="after")
    def _check_wiring(self) -> "TopologySpec":
        n = len(self.layers)
        if self.layers[0].in_bit_width != self.input_bit_width:
            raise InvalidSpecError(
                f"layer 0 in_bit_width {self.layers[0].in_bit_width} "
                f"does not match input_bit_width {self.input_bit_width}"
            )
        if self.input_shape is not None:
            h, w, c = self.input_shape
            if h * w * c != self.input_features:
                raise InvalidSpecError(
                    f"input_shape {self.input_shape} does not match {self.input_features} input features"
                )
        for source, dest in self.skip_links:
            if not (0 <= source < n and 0 <= dest < n):
                raise InvalidSpecError(f"skip link ({source}, {dest}) names a missing layer")
            if dest <= source:
                raise InvalidSpecError(f"skip link ({source}, {dest}) must point forward")
            # a concatenated input has no spatial geometry
            if self.layers[dest].kind == "sparse_conv":
                raise InvalidSpecError(f"skip link ({source}, {dest}) targets a convolution")
        if len(set(self.skip_links)) != len(self.skip_links):
            raise InvalidSpecError("duplicate skip links")

        for i, layer in enumerate(self.layers):
            for producer in self.producers(i):
                if producer < 0:
                    continue
                upstream = self.layers[producer]
                if (upstream.out_bit_width, upstream.max_val_out) != (layer.in_bit_width, layer.max_val_in):
                    raise InvalidSpecError(
                        f"layer {i} input quantizer does not match the output quantizer of layer {producer}"
                    )
            width = self.input_width(i)
            if layer.kind == "sparse_linear" and layer.fan_in > width:
                raise InvalidSpecError(
                    f"layer {i} fan_in {layer.fan_in} exceeds input width {width}"
                )
            if layer.kind == "sparse_conv":
                shape = self.input_geometry(i)
                if shape is None:
                    raise InvalidSpecError(f"layer {i} is a convolution without spatial input")
                h, w, _ = shape
                if h < layer.kernel_size or w < layer.kernel_size:
                    raise InvalidSpecError(
                        f"layer {i} kernel {layer.kernel_size} larger than input {h}x{w}"
                    )
                if layer.pointwise_fan_in > self.depthwise_channels(i):
                    raise InvalidSpecError(
                        f"layer {i} pointwise_fan_in {layer.pointwise_fan_in} exceeds "
                        f"{self.depthwise_channels(i)} depthwise channels"
                    )
        return self

    def producers(self, i: int) -> List[int]:
        """Layers whose outputs form layer i's input, in concatenation order (-1 is the primary input)."""
        return [i - 1] + self.skip_sources(i)

    def skip_sources(self, i: int) -> List[int]:
        return sorted(source for source, dest in self.skip_links if dest == i)

    def input_geometry(self, i: int) -> Optional[Tuple[int, int, int]]:
        if i == 0:
            return self.input_shape
        if self.skip_sources(i):
            return None
        return self.output_geometry(i - 1)

    def output_geometry(self, i: int) -> Optional[Tuple[int, int, int]]:
        layer = self.layers[i]
        if layer.kind != "sparse_conv":
            return None
        h, w, _ = self.input_geometry(i)
        return (
            conv_output_size(h, layer.kernel_size, layer.stride),
            conv_output_size(w, layer.kernel_size, layer.stride),
            layer.neurons,
        )

    def output_width(self, i: int) -> int:
        shape = self.output_geometry(i)
        if shape is not None:
            h, w, c = shape
            return h * w * c
        return self.layers[i].neurons

    def input_width(self, i: int) -> int:
        total = 0
        for producer in self.producers(i):
            total += self.input_features if producer < 0 else self.output_width(producer)
        return total

    def depthwise_channels(self, i: int) -> int:
        layer = self.layers[i]
        _, _, channels = self.input_geometry(i)
        if layer.first_layer and channels == 1:
            return layer.neurons
        return channels

    def fan_in(self, i: int) -> int:
        """Synapses per neuron; dense layers connect to every input."""
        layer = self.layers[i]
        if layer.kind == "dense_quant_linear":
            return self.input_width(i)
        if layer.kind == "sparse_conv":
            return layer.kernel_fan_in
        return layer.fan_in

    @property
    def output_features(self) -> int:
        return self.output_width(len(self.layers) - 1)

    @property
    def output_quantizer(self) -> QuantizerParams:
        return self.layers[-1].output_quantizer


def conv_output_size(size: int, kernel_size: int, stride: int) -> int:
    """Valid-convolution output length: floor(1 + (size - k) / stride)."""
    return 1 + (size - kernel_size) // stride
