from typing import Dict, List, Tuple

from pydantic import BaseModel, RootModel

# neuron id -> [input bit strings, output bit strings]
NeuronRows = Dict[str, Tuple[List[str], List[str]]]


class LayerTablesDoc(RootModel[NeuronRows]):
    """Serialized truth tables of a linear layer, keyed by neuron id."""


class ConvTablesDoc(BaseModel):
    """Serialized truth tables of a convolution, split by stage."""

    dw: NeuronRows
    pt: NeuronRows

    class Config:
        extra = "forbid"
