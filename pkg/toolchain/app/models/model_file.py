from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from ..errors import ModelFormatError
from ..quant import QuantizerParams
from .topology import TopologySpec


FORMAT_VERSION = "1"


class BatchNormParams(BaseModel):
    """Per-neuron batch normalization statistics and affine parameters."""

    gamma: List[float]
    beta: List[float]
    running_mean: List[float]
    running_var: List[float]
    eps: float = 1e-5

    class Config:
        frozen = True

    @classmethod
    def identity(cls, n: int) -> "BatchNormParams":
        return cls(gamma=[1.0] * n, beta=[0.0] * n, running_mean=[0.0] * n, running_var=[1.0] * n, eps=0.0)

    def __len__(self) -> int:
        return len(self.gamma)


class LayerQuantizers(BaseModel):
    input: QuantizerParams
    output: QuantizerParams
    intermediate: Optional[QuantizerParams] = None  # sparse_conv
    weight_bit_width: Optional[int] = None  # dense_quant_linear
    weight_scale: Optional[float] = None  # dense_quant_linear grid step

    class Config:
        frozen = True


class StageState(BaseModel):
    """Weights, connectivity and batch norm of one linear stage."""

    weights: List[List[float]]
    mask: List[List[int]]
    batchnorm: BatchNormParams

    class Config:
        frozen = True


class LayerState(BaseModel):
    """
    Trained parameters of one layer.

    For sparse_conv the top-level weights/mask/batchnorm describe the depthwise
    stage (rows are channels, columns are kernel positions) and `pointwise`
    holds the 1x1 stage (rows are output maps, columns are depthwise channels).
    """

    kind: str
    weights: List[List[float]]
    mask: List[List[int]]
    batchnorm: BatchNormParams
    quantizer: LayerQuantizers
    pointwise: Optional[StageState] = None

    class Config:
        frozen = True

    @property
    def stage(self) -> StageState:
        return StageState(weights=self.weights, mask=self.mask, batchnorm=self.batchnorm)


class ModelFile(BaseModel):
    """Serialized trained model: topology plus per-layer parameters."""

    version: Literal["1"] = FORMAT_VERSION
    topology: TopologySpec
    layers: List[LayerState] = Field(min_length=1)

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _check_invariants(self) -> "ModelFile":
        spec = self.topology
        if len(self.layers) != len(spec.layers):
            raise ModelFormatError(
                f"model has {len(self.layers)} layer states for {len(spec.layers)} layers"
            )
        for i, (layer_spec, state) in enumerate(zip(spec.layers, self.layers)):
            if state.kind != layer_spec.kind:
                raise ModelFormatError(f"layer {i}: state kind {state.kind} != spec kind {layer_spec.kind}")
            if state.quantizer.input != layer_spec.input_quantizer or state.quantizer.output != layer_spec.output_quantizer:
                raise ModelFormatError(f"layer {i}: quantizer parameters disagree with topology")
            if layer_spec.kind == "sparse_conv":
                k2 = layer_spec.kernel_size ** 2
                channels = spec.depthwise_channels(i)
                _check_stage(i, "depthwise", state.stage, channels, k2, layer_spec.kernel_fan_in)
                if state.pointwise is None:
                    raise ModelFormatError(f"layer {i}: sparse_conv without pointwise stage")
                _check_stage(i, "pointwise", state.pointwise, layer_spec.neurons, channels, layer_spec.pointwise_fan_in)
                if state.quantizer.intermediate is None:
                    raise ModelFormatError(f"layer {i}: sparse_conv without intermediate quantizer")
            else:
                _check_stage(i, "linear", state.stage, layer_spec.neurons, spec.input_width(i), spec.fan_in(i))
        return self


def _check_stage(index: int, name: str, stage: StageState, rows: int, columns: int, fan_in: int) -> None:
    where = f"layer {index} {name} stage"
    if len(stage.weights) != rows or len(stage.mask) != rows or len(stage.batchnorm) != rows:
        raise ModelFormatError(f"{where}: expected {rows} neurons")
    for n, (row, support) in enumerate(zip(stage.weights, stage.mask)):
        if len(row) != columns:
            raise ModelFormatError(f"{where}: neuron {n} has {len(row)} weights, expected {columns}")
        if len(support) != fan_in:
            raise ModelFormatError(f"{where}: neuron {n} has fan-in {len(support)}, expected {fan_in}")
        if any(b <= a for a, b in zip(support, support[1:])) or (support and not 0 <= support[0] <= support[-1] < columns):
            raise ModelFormatError(f"{where}: neuron {n} mask is not strictly ascending within 0..{columns - 1}")
        allowed = set(support)
        for j, w in enumerate(row):
            if j not in allowed and w != 0.0:
                raise ModelFormatError(f"{where}: neuron {n} has nonzero weight at masked input {j}")
