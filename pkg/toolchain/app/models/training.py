from typing import Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from ..errors import PruneScheduleError


class PruneSchedule(BaseModel):
    """How connectivity evolves during training."""

    strategy: Literal["apriori", "iterative", "momentum"] = "apriori"
    prune_rate: float = Field(default=0.2, ge=0.0, le=1.0)
    decay: Literal["constant", "cosine"] = "constant"
    prune_every: int = Field(default=100, ge=1)  # optimizer steps between prune events
    prune_events: Optional[int] = Field(default=None, ge=1)  # iterative strategy
    prune_per_neuron: Optional[int] = Field(default=None, ge=0)  # P1
    regrow_per_neuron: Optional[int] = Field(default=None, ge=0)  # R1
    momentum_alpha: float = Field(default=0.9, ge=0.0, lt=1.0)

    class Config:
        frozen = True
        extra = "forbid"

    @model_validator(mode="after")
    def _check_balance(self) -> "PruneSchedule":
        if self.strategy == "momentum":
            p1, r1 = self.prune_per_neuron, self.regrow_per_neuron
            if p1 is not None and r1 is not None and p1 != r1:
                raise PruneScheduleError(
                    f"momentum pruning must regrow what it prunes (P1={p1}, R1={r1})"
                )
        return self

    def neuron_prune_count(self, fan_in: int, rate: Optional[float] = None) -> int:
        """P1 for a neuron with the given fan-in (equal to R1 for momentum pruning)."""
        if self.prune_per_neuron is not None:
            return self.prune_per_neuron
        if self.regrow_per_neuron is not None:
            return self.regrow_per_neuron
        return int((self.prune_rate if rate is None else rate) * fan_in)


class TrainConfig(BaseModel):
    epochs: int = Field(default=10, ge=0)
    batch_size: int = Field(default=128, ge=1)
    optimizer: Literal["sgd", "adam"] = "adam"
    lr: float = Field(default=0.01, gt=0)
    momentum: float = Field(default=0.9, ge=0)
    betas: Tuple[float, float] = (0.9, 0.999)
    weight_decay: float = Field(default=0.0, ge=0)
    loss: Literal["cross_entropy", "mse"] = "cross_entropy"
    test_fraction: float = Field(default=0.1, ge=0.0, lt=1.0)
    schedule: PruneSchedule = Field(default_factory=PruneSchedule)

    class Config:
        frozen = True
        extra = "forbid"
