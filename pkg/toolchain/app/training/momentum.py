from dataclasses import dataclass, field
from typing import List, Sequence

import torch

from .modules import MaskedWeight


@dataclass
class PruneStats:
    """Momentum statistics gathered before a prune event."""

    mean_momentum: List[float] = field(default_factory=list)  # per masked weight, normalized
    non_zero: List[int] = field(default_factory=list)
    total_momentum: float = 0.0
    total_non_zero: int = 0


class MomentumState:
    """
    Exponentially smoothed gradient per weight, M <- alpha * M + (1 - alpha) * g.

    Updated from the dense gradient before it is masked, so off-mask entries
    score the connections a regrowth step may add. After every prune event
    the entries outside the new mask are cleared.
    """

    def __init__(self, weights: Sequence[MaskedWeight], alpha: float = 0.9):
        self.weights = list(weights)
        self.alpha = alpha
        self.buffers: List[torch.Tensor] = [torch.zeros_like(w.weight, requires_grad=False) for w in self.weights]

    @torch.no_grad()
    def update(self) -> None:
        for buffer, weight in zip(self.buffers, self.weights):
            if weight.weight.grad is None:
                continue
            buffer.mul_(self.alpha).add_(weight.weight.grad, alpha=1.0 - self.alpha)

    @torch.no_grad()
    def reset_off_mask(self) -> None:
        for buffer, weight in zip(self.buffers, self.weights):
            buffer.mul_(weight.mask)

    def statistics(self) -> PruneStats:
        stats = PruneStats()
        raw = []
        for buffer, weight in zip(self.buffers, self.weights):
            on = weight.mask != 0
            count = int(on.sum())
            raw.append(float(buffer.abs()[on].mean()) if count else 0.0)
            stats.non_zero.append(count)
        stats.total_momentum = sum(raw)
        stats.total_non_zero = sum(stats.non_zero)
        if stats.total_momentum > 0:
            stats.mean_momentum = [m / stats.total_momentum for m in raw]
        else:
            stats.mean_momentum = [0.0] * len(raw)
        return stats
