"""
Connectivity masks and layer-sparsity allocation.
"""
import logging
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import InvalidSpecError
from ..models import TopologySpec

logger = logging.getLogger(__name__)


class DegenerateWidthWarning(UserWarning):
    """Erdős–Rényi sparsity fell outside [0, 1] and was clamped."""


@dataclass(frozen=True)
class ConnectivityMask:
    """Per-neuron strictly ascending input indices, all of length fan_in."""

    rows: Tuple[Tuple[int, ...], ...]
    width: int

    def __post_init__(self):
        fan_ins = {len(row) for row in self.rows}
        if len(fan_ins) > 1:
            raise InvalidSpecError(f"mask rows have differing fan-in {sorted(fan_ins)}")
        for n, row in enumerate(self.rows):
            if any(b <= a for a, b in zip(row, row[1:])):
                raise InvalidSpecError(f"mask of neuron {n} is not strictly ascending")
            if row and not 0 <= row[0] <= row[-1] < self.width:
                raise InvalidSpecError(f"mask of neuron {n} indexes outside 0..{self.width - 1}")

    @property
    def fan_in(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    def as_lists(self) -> List[List[int]]:
        return [list(row) for row in self.rows]

    @classmethod
    def from_lists(cls, rows: Sequence[Sequence[int]], width: int) -> "ConnectivityMask":
        return cls(rows=tuple(tuple(int(i) for i in row) for row in rows), width=width)

    @classmethod
    def dense(cls, neurons: int, width: int) -> "ConnectivityMask":
        return cls(rows=tuple(tuple(range(width)) for _ in range(neurons)), width=width)


@dataclass(frozen=True)
class LayerMasks:
    """Masks of one layer; convolutions carry a second, pointwise mask."""

    primary: ConnectivityMask
    pointwise: Optional[ConnectivityMask] = None


def _rng(*key: int) -> np.random.Generator:
    return np.random.default_rng([k % 2 ** 64 for k in key])


def sample_mask(neurons: int, width: int, fan_in: int, *key: int) -> ConnectivityMask:
    """Uniform fan_in-subsets of range(width), one stream per (key, neuron)."""
    if fan_in > width:
        raise InvalidSpecError(f"fan_in {fan_in} exceeds input width {width}")
    rows = []
    for n in range(neurons):
        picks = _rng(*key, n).choice(width, size=fan_in, replace=False)
        rows.append(tuple(sorted(int(i) for i in picks)))
    return ConnectivityMask(rows=tuple(rows), width=width)


def init_random_masks(spec: TopologySpec, seed: Optional[int] = None) -> List[LayerMasks]:
    """Deterministic random masks seeded by (seed, layer index, neuron index)."""
    seed = spec.seed if seed is None else seed
    masks = []
    for i, layer in enumerate(spec.layers):
        width = spec.input_width(i)
        if layer.kind == "sparse_linear":
            masks.append(LayerMasks(sample_mask(layer.neurons, width, layer.fan_in, seed, i)))
        elif layer.kind == "dense_quant_linear":
            masks.append(LayerMasks(ConnectivityMask.dense(layer.neurons, width)))
        else:
            channels = spec.depthwise_channels(i)
            depthwise = sample_mask(channels, layer.kernel_size ** 2, layer.kernel_fan_in, seed, i, 0)
            pointwise = sample_mask(layer.neurons, channels, layer.pointwise_fan_in, seed, i, 1)
            masks.append(LayerMasks(depthwise, pointwise))
        logger.debug("sampled masks for layer %d (%s)", i, layer.kind)
    return masks


def erdos_renyi_allocation(layer_widths: Sequence[int]) -> List[float]:
    """Per-layer sparsity 1 - (n_prev + n) / (n_prev * n), clamped to [0, 1]."""
    if len(layer_widths) < 2:
        raise InvalidSpecError("Erdős–Rényi allocation needs at least two layer widths")
    if any(n <= 0 for n in layer_widths):
        raise InvalidSpecError(f"layer widths must be positive, got {list(layer_widths)}")
    sparsities = []
    for n_prev, n in zip(layer_widths, layer_widths[1:]):
        s = 1.0 - (n_prev + n) / (n_prev * n)
        if not 0.0 <= s <= 1.0:
            message = f"Erdős–Rényi sparsity {s} for widths ({n_prev}, {n}) clamped to [0, 1]"
            logger.warning(message)
            warnings.warn(message, DegenerateWidthWarning, stacklevel=2)
            s = min(max(s, 0.0), 1.0)
        sparsities.append(s)
    return sparsities


def erdos_renyi_fan_ins(input_features: int, widths: Sequence[int]) -> List[int]:
    """Fan-in per layer implied by the Erdős–Rényi densities."""
    all_widths = [input_features, *widths]
    sparsities = erdos_renyi_allocation(all_widths)
    return [
        max(1, min(n_prev, round((1.0 - s) * n_prev)))
        for n_prev, s in zip(all_widths, sparsities)
    ]


def uniform_allocation(n_layers: int, sparsity: float) -> List[float]:
    if not 0.0 <= sparsity <= 1.0:
        raise InvalidSpecError(f"sparsity {sparsity} outside [0, 1]")
    return [sparsity] * n_layers


def ensemble_ratio(n1: int, b1: int, n2: int, b2: int) -> float:
    """How many layers of cost 2^B2*N2 balance one of cost 2^B1*N1: N2 * 2^(B2-B1) / N1."""
    if min(n1, b1, n2, b2) <= 0:
        raise InvalidSpecError("ensemble_ratio arguments must be positive")
    return n2 * 2.0 ** (b2 - b1) / n1
