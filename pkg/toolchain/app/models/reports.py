from typing import Dict, List, Union

from pydantic import BaseModel, Field, model_validator

Count = Union[int, float]


class LayerCost(BaseModel):
    index: int
    kind: str
    neurons: int
    fan_in_bits: int
    out_bits: int
    luts: Count
    breakdown: Dict[str, Count] = Field(default_factory=dict)


class LutCostReport(BaseModel):
    """Analytical 6:1 LUT cost per layer."""

    layers: List[LayerCost]
    total: Count

    @model_validator(mode="after")
    def _check_total(self) -> "LutCostReport":
        if abs(self.total - sum(layer.luts for layer in self.layers)) > 1e-6 * max(1.0, abs(self.total)):
            raise ValueError("total does not equal the sum of layer costs")
        return self
