"""
Minibatch training with straight-through quantizers and the three
connectivity strategies (a-priori fixed, iterative, momentum).
"""
import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Union

import torch
import torch.nn.functional as F

from ..config import get_settings
from ..errors import DatasetError, DimensionMismatchError, NonFiniteValueError, TrainingDivergedError
from ..models import ModelFile, TrainConfig
from ..services.data import Dataset, Normalization, apply_normalization, fit_to_quantizer, train_test_split
from .modules import TrainableNetwork
from .momentum import MomentumState, PruneStats
from .pruning import decayed_rate, iterative_prune_step, momentum_prune_step

logger = logging.getLogger(__name__)

LossFn = Callable[[torch.Tensor, torch.Tensor], torch.Tensor]
METRICS_HEADER = ["epoch", "loss", "accuracy", "fan_in"]


@dataclass
class EpochMetrics:
    epoch: int
    loss: float
    accuracy: float
    fan_in: str

    def row(self) -> List[str]:
        return [str(self.epoch), f"{self.loss:.6f}", f"{self.accuracy:.6f}", self.fan_in]


@dataclass
class TrainResult:
    model: ModelFile
    metrics: List[EpochMetrics]
    normalization: Normalization
    prune_stats: List[PruneStats] = field(default_factory=list)

    @property
    def final_accuracy(self) -> float:
        return self.metrics[-1].accuracy if self.metrics else float("nan")


def loss_function(name: str, classes: int) -> LossFn:
    if name == "mse":
        return lambda logits, labels: F.mse_loss(logits, F.one_hot(labels, classes).to(logits.dtype))
    return F.cross_entropy


def build_optimizer(network: TrainableNetwork, config: TrainConfig) -> torch.optim.Optimizer:
    if config.optimizer == "sgd":
        return torch.optim.SGD(
            network.parameters(), lr=config.lr, momentum=config.momentum, weight_decay=config.weight_decay
        )
    return torch.optim.Adam(
        network.parameters(), lr=config.lr, betas=config.betas, weight_decay=config.weight_decay
    )


def training_step(
    network: TrainableNetwork,
    optimizer: torch.optim.Optimizer,
    x: torch.Tensor,
    target: torch.Tensor,
    loss_fn: LossFn,
    momentum: Optional[MomentumState] = None,
) -> float:
    """
    One optimizer step. The smoothed gradient sees the dense gradient; the
    optimizer only the masked one, and off-mask weights stay exactly zero.
    """
    optimizer.zero_grad()
    loss = loss_fn(network(x), target)
    value = float(loss.detach())
    if not math.isfinite(value):
        return value
    loss.backward()
    if momentum is not None:
        momentum.update()
    network.mask_gradients()
    optimizer.step()
    network.apply_masks()
    return value


@torch.no_grad()
def accuracy(network: TrainableNetwork, dataset: Dataset, batch_size: int = 1024) -> float:
    if len(dataset) == 0:
        return float("nan")
    was_training = network.training
    network.eval()
    correct = 0
    features = torch.as_tensor(dataset.features, dtype=torch.float32)
    labels = torch.as_tensor(dataset.labels)
    for start in range(0, len(dataset), batch_size):
        logits = network(features[start:start + batch_size])
        correct += int((logits.argmax(dim=1) == labels[start:start + batch_size]).sum())
    network.train(was_training)
    return correct / len(dataset)


def write_metrics(metrics: List[EpochMetrics], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        for m in metrics:
            writer.writerow(m.row())
    return path


def _check_dataset(model: ModelFile, dataset: Dataset) -> None:
    topology = model.topology
    if dataset.num_features != topology.input_features:
        raise DimensionMismatchError(
            f"dataset has {dataset.num_features} features, model expects {topology.input_features}"
        )
    if dataset.num_classes > topology.output_features:
        raise DatasetError(
            f"dataset has {dataset.num_classes} classes but the model has {topology.output_features} outputs"
        )
    if len(dataset) == 0:
        raise DatasetError("dataset is empty")


def _flush_iterative(network: TrainableNetwork, strategy: str, done: int, events: int) -> int:
    """Apply iterative prune events the step schedule did not reach."""
    if strategy != "iterative" or done >= events:
        return done
    message = f"{events - done} iterative prune events left at the end of training; applying them now"
    logger.warning(message)
    warnings.warn(message, RuntimeWarning, stacklevel=3)
    while done < events:
        done += 1
        iterative_prune_step(network.prunable_weights(), done, events)
    return done


def train(
    model: ModelFile,
    dataset: Dataset,
    config: TrainConfig,
    seed: Optional[int] = None,
    metrics_path: Optional[Union[str, Path]] = None,
) -> TrainResult:
    """
    Train `model` (masks, initial weights and topology) on `dataset`.

    Features are fitted into the first quantizer's range on the training
    split; the same map is applied to the held-out split. Returns the
    trained ModelFile plus per-epoch metrics.
    """
    settings = get_settings()
    seed = settings.default_seed if seed is None else seed
    torch.manual_seed(seed)
    torch.set_num_threads(settings.torch_threads)
    _check_dataset(model, dataset)

    topology = model.topology
    schedule = config.schedule
    train_set, test_set = train_test_split(dataset, config.test_fraction, seed)
    train_set, normalization = fit_to_quantizer(
        train_set, topology.layers[0].input_quantizer, per_feature=dataset.image_shape is None
    )
    test_set = apply_normalization(test_set, normalization) if len(test_set) else train_set

    network = TrainableNetwork(
        model,
        dense_masks=schedule.strategy == "iterative",
        generator=torch.Generator().manual_seed(seed),
    )
    network.train()
    optimizer = build_optimizer(network, config)
    loss_fn = loss_function(config.loss, topology.output_features)
    momentum = None
    if schedule.strategy == "momentum":
        momentum = MomentumState(network.prunable_weights(), schedule.momentum_alpha)

    features = torch.as_tensor(train_set.features, dtype=torch.float32)
    labels = torch.as_tensor(train_set.labels)
    batches_per_epoch = math.ceil(len(train_set) / config.batch_size)
    total_steps = config.epochs * batches_per_epoch
    total_events = (total_steps - 1) // schedule.prune_every if total_steps else 0
    iterative_events = schedule.prune_events or max(1, total_events)
    events_done = 0
    generator = torch.Generator().manual_seed(seed)

    metrics: List[EpochMetrics] = []
    prune_stats: List[PruneStats] = []
    last_finite: Optional[float] = None
    has_batchnorm = any(isinstance(m, torch.nn.BatchNorm1d) for m in network.modules())
    step = 0
    for epoch in range(config.epochs):
        order = torch.randperm(len(train_set), generator=generator)
        losses = []
        for start in range(0, len(train_set), config.batch_size):
            index = order[start:start + config.batch_size]
            if len(index) < 2 and has_batchnorm:
                continue  # batch statistics need two rows
            try:
                value = training_step(network, optimizer, features[index], labels[index], loss_fn, momentum)
            except NonFiniteValueError as e:
                raise TrainingDivergedError(epoch, step, last_finite) from e
            if not math.isfinite(value):
                raise TrainingDivergedError(epoch, step, last_finite)
            last_finite = value
            losses.append(value)
            step += 1

            if step % schedule.prune_every == 0 and step < total_steps:
                if schedule.strategy == "momentum":
                    rate = decayed_rate(schedule, events_done, total_events)
                    prune_stats.append(momentum_prune_step(momentum, schedule, rate))
                    events_done += 1
                elif schedule.strategy == "iterative" and events_done < iterative_events:
                    events_done += 1
                    iterative_prune_step(network.prunable_weights(), events_done, iterative_events)

        if epoch == config.epochs - 1:
            events_done = _flush_iterative(network, schedule.strategy, events_done, iterative_events)

        epoch_metrics = EpochMetrics(
            epoch=epoch,
            loss=sum(losses) / len(losses) if losses else float("nan"),
            accuracy=accuracy(network, test_set),
            fan_in=network.fan_in_summary(),
        )
        metrics.append(epoch_metrics)
        logger.info(
            "epoch %d: loss %.4f, accuracy %.4f, fan-in %s",
            epoch, epoch_metrics.loss, epoch_metrics.accuracy, epoch_metrics.fan_in,
        )

    _flush_iterative(network, schedule.strategy, events_done, iterative_events)

    network.eval()
    trained = network.to_model()
    if metrics_path is not None:
        write_metrics(metrics, metrics_path)
        logger.info("Wrote metrics for %d epochs to %s", len(metrics), metrics_path)
    return TrainResult(model=trained, metrics=metrics, normalization=normalization, prune_stats=prune_stats)
