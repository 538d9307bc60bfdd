"""
Model file and topology config persistence (JSON documents).
"""
import logging
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np
from pydantic import ValidationError
from pydantic_core import from_json, to_json

from ..errors import DatasetError, InvalidSpecError, LutCompilerError, ModelFormatError
from ..models import FORMAT_VERSION, ModelFile, TopologySpec, TrainConfig
from .data import Normalization

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _read_json(path: PathLike, error_cls: type[LutCompilerError]) -> Dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as e:
        raise error_cls(f"Cannot read {path}: {e.strerror or e}") from e
    try:
        data = from_json(text)
    except ValueError as e:
        raise error_cls(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise error_cls(f"{path} must contain a JSON object")
    return data


def save_model(model: ModelFile, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=1) + "\n", encoding="utf-8")
    logger.info("Wrote model (%d layers) to %s", len(model.layers), path)
    return path


def load_model(path: PathLike) -> ModelFile:
    data = _read_json(path, ModelFormatError)
    version = data.get("version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported model format version {version!r} (expected {FORMAT_VERSION!r})")
    try:
        return ModelFile.model_validate(data)
    except ValidationError as e:
        raise ModelFormatError(f"{path}: {e}") from e
    except InvalidSpecError as e:
        raise ModelFormatError(f"{path}: {e.message}") from e


def load_config(path: PathLike) -> Tuple[TopologySpec, TrainConfig]:
    """Topology config: TopologySpec fields plus an optional `training` block."""
    data = _read_json(path, InvalidSpecError)
    training = data.pop("training", None) or {}
    try:
        return TopologySpec.model_validate(data), TrainConfig.model_validate(training)
    except ValidationError as e:
        raise InvalidSpecError(f"{path}: {e}") from e


def save_config(spec: TopologySpec, path: PathLike, training: TrainConfig | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = spec.model_dump(mode="json")
    if training is not None:
        data["training"] = training.model_dump(mode="json")
    path.write_bytes(to_json(data, indent=1) + b"\n")
    return path


def save_normalization(normalization: Normalization, path: PathLike) -> Path:
    """Input scaling fitted during training, reused when verifying on dataset rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = {
        "kind": normalization.kind,
        "shift": normalization.shift.tolist(),
        "scale": normalization.scale.tolist(),
        "low": normalization.low,
        "span": normalization.span,
    }
    path.write_bytes(to_json(data, indent=1) + b"\n")
    return path


def load_normalization(path: PathLike) -> Normalization:
    data = _read_json(path, DatasetError)
    try:
        return Normalization(
            kind=data["kind"],
            shift=np.asarray(data["shift"], dtype=np.float64),
            scale=np.asarray(data["scale"], dtype=np.float64),
            low=float(data.get("low", 0.0)),
            span=float(data.get("span", 1.0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetError(f"{path}: malformed normalization record: {e}") from e
