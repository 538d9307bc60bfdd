"""
Building ModelFile documents from arrays, and freshly initialized models.
"""
from typing import List, Optional

import numpy as np
import torch

from ..models import BatchNormParams, LayerQuantizers, LayerState, ModelFile, StageState, TopologySpec
from ..quant import quantize_weights
from .masks import ConnectivityMask, init_random_masks


def masked_rows(weights: np.ndarray, mask: ConnectivityMask) -> List[List[float]]:
    """Weight rows with every off-mask entry set to exactly zero."""
    out = np.zeros((len(mask.rows), mask.width), dtype=np.float64)
    for n, row in enumerate(mask.rows):
        out[n, list(row)] = weights[n, list(row)]
    return out.tolist()


def layer_quantizers(spec: TopologySpec, i: int, weight_scale: Optional[float] = None) -> LayerQuantizers:
    layer = spec.layers[i]
    return LayerQuantizers(
        input=layer.input_quantizer,
        output=layer.output_quantizer,
        intermediate=layer.intermediate_quantizer if layer.kind == "sparse_conv" else None,
        weight_bit_width=layer.weight_bit_width,
        weight_scale=weight_scale,
    )


def _random_batchnorm(rng: np.random.Generator, n: int, max_val: float) -> BatchNormParams:
    return BatchNormParams(
        gamma=rng.uniform(0.5, 2.0, n).tolist(),
        beta=(rng.uniform(-0.5, 1.0, n) * max_val).tolist(),
        running_mean=rng.uniform(-0.5, 0.5, n).tolist(),
        running_var=rng.uniform(0.5, 2.0, n).tolist(),
        eps=1e-5,
    )


def init_model(spec: TopologySpec, seed: Optional[int] = None, random_batchnorm: bool = True) -> ModelFile:
    """
    Untrained model with random masks and weights.

    With random_batchnorm the statistics are drawn at random (layers with
    batchnorm disabled keep the identity), which spreads pre-activations
    across quantizer levels.
    """
    seed = spec.seed if seed is None else seed
    masks = init_random_masks(spec, seed)
    layers = []
    for i, (layer, layer_masks) in enumerate(zip(spec.layers, masks)):
        rng = np.random.default_rng([seed % 2 ** 64, 0x5EED, i])

        def batchnorm(n: int, max_val: float) -> BatchNormParams:
            if random_batchnorm and layer.batchnorm:
                return _random_batchnorm(rng, n, max_val)
            return BatchNormParams.identity(n)

        primary = layer_masks.primary
        raw = rng.normal(0.0, 1.0 / np.sqrt(primary.fan_in), (len(primary.rows), primary.width))
        weight_scale = None
        if layer.kind == "dense_quant_linear":
            q = quantize_weights(torch.from_numpy(raw), layer.weight_bit_width)
            raw, weight_scale = q.values.numpy(), q.scale
        pointwise = None
        if layer.kind == "sparse_conv":
            pw_mask = layer_masks.pointwise
            pw_raw = rng.normal(0.0, 1.0 / np.sqrt(pw_mask.fan_in), (len(pw_mask.rows), pw_mask.width))
            pointwise = StageState(
                weights=masked_rows(pw_raw, pw_mask),
                mask=pw_mask.as_lists(),
                batchnorm=batchnorm(len(pw_mask.rows), layer.max_val_out),
            )
            first_max = layer.intermediate_quantizer.max_val
        else:
            first_max = layer.max_val_out
        layers.append(
            LayerState(
                kind=layer.kind,
                weights=masked_rows(raw, primary),
                mask=primary.as_lists(),
                batchnorm=batchnorm(len(primary.rows), first_max),
                quantizer=layer_quantizers(spec, i, weight_scale),
                pointwise=pointwise,
            )
        )
    return ModelFile(topology=spec, layers=layers)
