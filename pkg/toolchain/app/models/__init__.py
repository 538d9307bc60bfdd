from .topology import LayerSpec, TopologySpec, conv_output_size, SPARSE_KINDS
from .model_file import (
    FORMAT_VERSION,
    BatchNormParams,
    LayerQuantizers,
    LayerState,
    ModelFile,
    StageState,
)
from .reports import LayerCost, LutCostReport
from .tables import ConvTablesDoc, LayerTablesDoc
from .training import PruneSchedule, TrainConfig

__all__ = [
    "LayerSpec",
    "TopologySpec",
    "conv_output_size",
    "SPARSE_KINDS",
    "FORMAT_VERSION",
    "BatchNormParams",
    "LayerQuantizers",
    "LayerState",
    "ModelFile",
    "StageState",
    "LayerCost",
    "LutCostReport",
    "ConvTablesDoc",
    "LayerTablesDoc",
    "PruneSchedule",
    "TrainConfig",
]
