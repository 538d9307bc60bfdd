from typing import Dict, Type

from ..errors import UnsupportedLayerError
from ..models import LayerState, TopologySpec
from .base import QuantLayer
from .dense_quant_linear import DenseQuantLinearLayer
from .sparse_conv import SparseConvLayer
from .sparse_linear import SparseLinearLayer


class LayerRegistry:
    """Registry mapping layer kinds to their inference implementations."""

    def __init__(self):
        self._layers: Dict[str, Type[QuantLayer]] = {}
        self._register_default_layers()

    def _register_default_layers(self):
        self.register(SparseLinearLayer)
        self.register(DenseQuantLinearLayer)
        self.register(SparseConvLayer)

    def register(self, layer_cls: Type[QuantLayer]):
        self._layers[layer_cls.kind] = layer_cls

    def get_layer_class(self, kind: str) -> Type[QuantLayer]:
        if kind not in self._layers:
            raise UnsupportedLayerError(f"Unknown layer kind: {kind}")
        return self._layers[kind]

    def create(self, topology: TopologySpec, index: int, state: LayerState) -> QuantLayer:
        return self.get_layer_class(state.kind)(topology, index, state)

    def list_kinds(self) -> list[str]:
        return list(self._layers.keys())


# Global registry instance
layer_registry = LayerRegistry()
