"""
Connectivity updates during training.

Momentum pruning keeps every neuron's fan-in fixed: each event removes the
P1 smallest-magnitude connections of a neuron and adds the R1 unconnected
inputs with the largest smoothed gradient. Iterative pruning starts dense
and shrinks each neuron's support on a linear schedule down to the target
fan-in. Ties always go to the lowest input index.
"""
import logging
import math
from typing import List, Optional, Sequence

import torch

from ..errors import PruneScheduleError
from ..models import PruneSchedule
from .modules import MaskedWeight
from .momentum import MomentumState, PruneStats

logger = logging.getLogger(__name__)


def decayed_rate(schedule: PruneSchedule, event: int, total_events: int) -> float:
    """Prune rate for a given event; cosine decay anneals it towards zero."""
    if schedule.decay == "constant" or total_events <= 0:
        return schedule.prune_rate
    return schedule.prune_rate * 0.5 * (1.0 + math.cos(math.pi * event / total_events))


def _smallest_on_mask(weight: torch.Tensor, mask: torch.Tensor, count: int) -> torch.Tensor:
    """Per row, indices of the `count` smallest |w| inside the mask."""
    magnitude = weight.abs().to(torch.float64).masked_fill(mask == 0, math.inf)
    return torch.sort(magnitude, dim=1, stable=True).indices[:, :count]


def prune_regrow(
    weight: torch.Tensor, mask: torch.Tensor, momentum: torch.Tensor, prune: int, regrow: int
) -> torch.Tensor:
    """
    New mask after pruning `prune` and regrowing `regrow` connections per row.

    Regrowth candidates are the positions outside the mask before this step,
    so a connection pruned here cannot come straight back.
    """
    fan_in = int(mask[0].sum()) if mask.shape[0] else 0
    if prune > fan_in:
        raise PruneScheduleError(f"cannot prune {prune} of {fan_in} connections per neuron")
    available = mask.shape[1] - fan_in
    if regrow > available:
        raise PruneScheduleError(
            f"only {available} unconnected inputs per neuron, cannot regrow {regrow}"
        )
    new_mask = mask.clone()
    if prune:
        new_mask.scatter_(1, _smallest_on_mask(weight, mask, prune), 0.0)
    if regrow:
        score = momentum.abs().to(torch.float64).masked_fill(mask != 0, -math.inf)
        grown = torch.sort(-score, dim=1, stable=True).indices[:, :regrow]
        new_mask.scatter_(1, grown, 1.0)
    return new_mask


def momentum_prune_step(state: MomentumState, schedule: PruneSchedule, rate: Optional[float] = None) -> PruneStats:
    """
    One fan-in preserving prune event over the prunable matrices the state tracks.

    The returned statistics are gathered before any mask changes.
    """
    stats = state.statistics()
    for weight, buffer in zip(state.weights, state.buffers):
        if not weight.prunable:
            continue
        sizes = weight.support_sizes()
        if bool((sizes != weight.fan_in).any()):
            raise PruneScheduleError(
                f"momentum pruning needs fan-in {weight.fan_in} on every neuron, found {sizes.unique().tolist()}"
            )
        count = schedule.neuron_prune_count(weight.fan_in, rate)
        weight.set_mask(prune_regrow(weight.weight.detach(), weight.mask, buffer, count, count))
    state.reset_off_mask()
    logger.debug("momentum prune event: non-zero per matrix %s", stats.non_zero)
    return stats


def linear_support_schedule(start: int, target: int, events: int) -> List[int]:
    """Support size after each of `events` prune events, shrinking linearly from start to target."""
    if target > start:
        raise PruneScheduleError(f"target fan-in {target} exceeds starting support {start}")
    if events < 1:
        raise PruneScheduleError("iterative pruning needs at least one prune event")
    return [start - ((start - target) * e) // events for e in range(1, events + 1)]


def prune_to_support(weight: MaskedWeight, support: int) -> None:
    """Drop the smallest-magnitude connections of each neuron until `support` remain."""
    sizes = weight.support_sizes()
    current = int(sizes.max()) if sizes.numel() else 0
    if bool((sizes != current).any()):
        raise PruneScheduleError(f"uneven supports {sizes.unique().tolist()} before a prune event")
    if support > current:
        raise PruneScheduleError(f"cannot grow support from {current} to {support} by pruning")
    if support == current:
        return
    new_mask = weight.mask.clone()
    new_mask.scatter_(1, _smallest_on_mask(weight.weight.detach(), weight.mask, current - support), 0.0)
    weight.set_mask(new_mask)


def iterative_prune_step(weights: Sequence[MaskedWeight], event: int, events: int) -> None:
    """
    Apply prune event `event` (1-based) of `events` to weights trained from a
    dense start; after the last event every neuron has its target fan-in.
    """
    if not 1 <= event <= events:
        raise PruneScheduleError(f"prune event {event} outside 1..{events}; the schedule would undershoot the fan-in")
    for weight in weights:
        if not weight.prunable:
            continue
        support = linear_support_schedule(weight.width, weight.fan_in, events)[event - 1]
        if support < weight.fan_in:
            raise PruneScheduleError(f"support {support} would undershoot fan-in {weight.fan_in}")
        prune_to_support(weight, support)
    logger.debug(
        "iterative prune event %d/%d: supports %s",
        event,
        events,
        [int(w.support_sizes().max()) for w in weights if w.prunable],
    )


def regrowth_allocation(total_params: int, sparsity: float, mean_momenta: Sequence[float]) -> List[int]:
    """
    Split n(Params) * (1 - r) regrown connections across layers in proportion
    to their normalized mean momentum. Shares are rounded down and the
    remainder goes to the layer with the largest momentum.
    """
    if not 0.0 <= sparsity <= 1.0:
        raise PruneScheduleError(f"sparsity {sparsity} outside [0, 1]")
    if total_params < 0 or any(m < 0 for m in mean_momenta):
        raise PruneScheduleError("parameter count and momenta must be non-negative")
    if not mean_momenta:
        return []
    total = math.floor(round(total_params * (1.0 - sparsity), 9))
    norm = sum(mean_momenta)
    if norm == 0:
        shares = [1.0 / len(mean_momenta)] * len(mean_momenta)
    else:
        shares = [m / norm for m in mean_momenta]
    counts = [math.floor(round(total * s, 9)) for s in shares]
    best = max(range(len(shares)), key=lambda i: (shares[i], -i))
    counts[best] += total - sum(counts)
    return counts
