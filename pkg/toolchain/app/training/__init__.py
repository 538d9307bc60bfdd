from .modules import MaskedWeight, TrainableConv, TrainableLinear, TrainableNetwork
from .momentum import MomentumState, PruneStats
from .pruning import (
    decayed_rate,
    iterative_prune_step,
    linear_support_schedule,
    momentum_prune_step,
    prune_regrow,
    prune_to_support,
    regrowth_allocation,
)
from .trainer import (
    EpochMetrics,
    TrainResult,
    accuracy,
    build_optimizer,
    loss_function,
    train,
    training_step,
    write_metrics,
)

__all__ = [
    "MaskedWeight",
    "TrainableConv",
    "TrainableLinear",
    "TrainableNetwork",
    "MomentumState",
    "PruneStats",
    "decayed_rate",
    "iterative_prune_step",
    "linear_support_schedule",
    "momentum_prune_step",
    "prune_regrow",
    "prune_to_support",
    "regrowth_allocation",
    "EpochMetrics",
    "TrainResult",
    "accuracy",
    "build_optimizer",
    "loss_function",
    "train",
    "training_step",
    "write_metrics",
]
