from .base import BatchNorm, LinearStage, QuantLayer, accumulate
from .sparse_linear import SparseLinearLayer, forward_sparse_linear
from .dense_quant_linear import DenseQuantLinearLayer, forward_dense_quant_linear
from .sparse_conv import SparseConvLayer, conv_window_index, forward_sparse_conv
from .registry import LayerRegistry, layer_registry
from .network import QuantizedNetwork, assemble_input, run_layers

__all__ = [
    "BatchNorm",
    "LinearStage",
    "QuantLayer",
    "accumulate",
    "SparseLinearLayer",
    "forward_sparse_linear",
    "DenseQuantLinearLayer",
    "forward_dense_quant_linear",
    "SparseConvLayer",
    "forward_sparse_conv",
    "conv_window_index",
    "LayerRegistry",
    "layer_registry",
    "QuantizedNetwork",
    "assemble_input",
    "run_layers",
]
