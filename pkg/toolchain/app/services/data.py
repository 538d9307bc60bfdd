"""
Dataset ingestion: MNIST IDX files and CSV feature tables.
"""
import csv
import gzip
import logging
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import numpy as np

from ..errors import DatasetError
from ..quant import QuantizerParams, active_range

logger = logging.getLogger(__name__)

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801

PathLike = Union[str, Path]


@dataclass(frozen=True, eq=False)
class Normalization:
    """Per-feature affine map x' = (x - shift) / scale * span + low."""

    kind: Literal["pixel", "standard", "minmax"]
    shift: np.ndarray
    scale: np.ndarray
    low: float = 0.0
    span: float = 1.0

    def apply(self, features: np.ndarray) -> np.ndarray:
        return (features - self.shift) / self.scale * self.span + self.low

    def then(self, other: "Normalization") -> "Normalization":
        """The single map equal to applying self, then other; keeps other's kind and range."""
        return Normalization(
            other.kind,
            self.shift + (other.shift - self.low) * self.scale / self.span,
            self.scale * other.scale / self.span,
            other.low,
            other.span,
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray  # float64 [rows, features]
    labels: np.ndarray  # int64 [rows]
    num_classes: int
    normalization: Optional[Normalization] = None
    class_names: List[str] = field(default_factory=list)
    image_shape: Optional[Tuple[int, int, int]] = None  # H, W, C

    def __post_init__(self):
        if self.features.shape[0] != self.labels.shape[0]:
            raise DatasetError(f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} labels")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise DatasetError(f"labels must lie in 0..{self.num_classes - 1}")

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    def images(self) -> np.ndarray:
        """Features reshaped to [rows, H, W, C] for convolutional use."""
        if self.image_shape is None:
            raise DatasetError("dataset has no image shape")
        return self.features.reshape(len(self), *self.image_shape)

    def subset(self, index: np.ndarray) -> "Dataset":
        return replace(self, features=self.features[index], labels=self.labels[index])


def _open(path: Path):
    return gzip.open(path, "rb") if path.suffix == ".gz" else open(path, "rb")


def _read_idx(path: PathLike, magic: int) -> Tuple[Tuple[int, ...], bytes]:
    path = Path(path)
    try:
        with _open(path) as f:
            payload = f.read()
    except OSError as e:
        raise DatasetError(f"Cannot read {path}: {e}") from e
    if len(payload) < 8:
        raise DatasetError(f"{path}: truncated IDX header")
    (found,) = struct.unpack(">I", payload[:4])
    if found != magic:
        raise DatasetError(f"{path}: bad IDX magic 0x{found:08x}, expected 0x{magic:08x}")
    ndims = found & 0xFF
    header = 4 + 4 * ndims
    if len(payload) < header:
        raise DatasetError(f"{path}: truncated IDX header")
    dims = struct.unpack(f">{ndims}I", payload[4:header])
    body = payload[header:]
    expected = int(np.prod(dims))
    if len(body) < expected:
        raise DatasetError(f"{path}: truncated payload, {len(body)} of {expected} bytes")
    return dims, body[:expected]


def load_idx(images_path: PathLike, labels_path: PathLike) -> Dataset:
    """MNIST-style IDX pair; pixels scaled to [0, 1] and flattened row-major."""
    (count, rows, cols), pixels = _read_idx(images_path, IDX_IMAGE_MAGIC)
    (label_count,), raw_labels = _read_idx(labels_path, IDX_LABEL_MAGIC)
    if label_count != count:
        raise DatasetError(f"{count} images but {label_count} labels")
    images = np.frombuffer(pixels, dtype=np.uint8).reshape(count, rows * cols)
    labels = np.frombuffer(raw_labels, dtype=np.uint8).astype(np.int64)
    features = images.astype(np.float64) / 255.0
    n = rows * cols
    logger.info("Loaded %d IDX images of %dx%d from %s", count, rows, cols, images_path)
    return Dataset(
        features=features,
        labels=labels,
        num_classes=max(10, int(labels.max()) + 1) if labels.size else 10,
        normalization=Normalization("pixel", np.zeros(n), np.full(n, 255.0)),
        image_shape=(rows, cols, 1),
    )


def load_mnist_dir(data_dir: PathLike, split: Literal["train", "t10k"] = "train") -> Dataset:
    """Find the standard MNIST file names (optionally gzipped) in a directory."""
    data_dir = Path(data_dir)
    found = []
    for kind in ("images-idx3-ubyte", "labels-idx1-ubyte"):
        candidates = [data_dir / f"{split}-{kind}{suffix}" for suffix in ("", ".gz")]
        candidates += [data_dir / f"{split}-{kind.replace('-idx', '.idx')}{suffix}" for suffix in ("", ".gz")]
        match = next((p for p in candidates if p.exists()), None)
        if match is None:
            raise DatasetError(f"no {split} {kind} file in {data_dir}")
        found.append(match)
    return load_idx(*found)


def load_csv(path: PathLike, label_column: str, standardize: bool = True) -> Dataset:
    """
    Header-row CSV; numeric feature columns are standardized to mean 0, std 1
    with the file's own statistics. standardize=False returns the raw columns.
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            rows = [row for row in reader if row]
    except OSError as e:
        raise DatasetError(f"Cannot read {path}: {e}") from e
    if header is None:
        raise DatasetError(f"{path}: empty CSV file")
    header = [name.strip() for name in header]
    if label_column not in header:
        raise DatasetError(f"{path}: no label column {label_column!r}")
    label_at = header.index(label_column)
    feature_at = [i for i in range(len(header)) if i != label_at]

    values = np.empty((len(rows), len(feature_at)), dtype=np.float64)
    raw_labels = []
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise DatasetError(f"{path}: row {r + 2} has {len(row)} cells, expected {len(header)}")
        raw_labels.append(row[label_at].strip())
        for c, i in enumerate(feature_at):
            try:
                values[r, c] = float(row[i])
            except ValueError as e:
                raise DatasetError(f"{path}: non-numeric cell {row[i]!r} in column {header[i]!r}, row {r + 2}") from e

    class_names: List[str] = []
    try:
        labels = np.array([int(v) for v in raw_labels], dtype=np.int64)
    except ValueError:
        class_names = sorted(set(raw_labels))
        labels = np.array([class_names.index(v) for v in raw_labels], dtype=np.int64)
    if labels.size and labels.min() < 0:
        raise DatasetError(f"{path}: negative class label")

    mean = values.mean(axis=0) if len(rows) else np.zeros(len(feature_at))
    std = values.std(axis=0) if len(rows) else np.ones(len(feature_at))
    std = np.where(std == 0.0, 1.0, std)
    normalization = Normalization("standard", mean, std)
    logger.info("Loaded %d rows, %d features from %s", len(rows), len(feature_at), path)
    return Dataset(
        features=normalization.apply(values) if standardize else values,
        labels=labels,
        num_classes=len(class_names) or (int(labels.max()) + 1 if labels.size else 0),
        normalization=normalization if standardize else None,
        class_names=class_names,
    )


def train_test_split(dataset: Dataset, test_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Seeded shuffle, then the last test_fraction of rows become the test split."""
    if not 0.0 <= test_fraction < 1.0:
        raise DatasetError(f"test_fraction {test_fraction} outside [0, 1)")
    order = np.random.default_rng(seed % 2 ** 64).permutation(len(dataset))
    n_test = int(round(len(dataset) * test_fraction))
    cut = len(dataset) - n_test
    return dataset.subset(order[:cut]), dataset.subset(order[cut:])


def fit_to_quantizer(
    dataset: Dataset, params: QuantizerParams, per_feature: bool = True
) -> Tuple[Dataset, Normalization]:
    """
    Min-max map features into the quantizer's active range. The returned
    normalization is reused for held-out data.
    """
    low, high = active_range(params)
    x = dataset.features
    if per_feature:
        lo, hi = x.min(axis=0), x.max(axis=0)
    else:
        lo = np.full(x.shape[1], x.min())
        hi = np.full(x.shape[1], x.max())
    scale = np.where(hi > lo, hi - lo, 1.0)
    normalization = Normalization("minmax", lo, scale, low, high - low)
    return replace(dataset, features=normalization.apply(x)), normalization


def apply_normalization(dataset: Dataset, normalization: Normalization) -> Dataset:
    return replace(dataset, features=normalization.apply(dataset.features))


def stored_normalization(dataset: Dataset, fitted: Normalization) -> Normalization:
    """
    The record that maps what a loader reads onto the quantizer range. Pixel
    scaling is fixed and left to the IDX loader; per-file CSV statistics are
    folded in so held-out files are mapped with the training statistics.
    """
    if dataset.normalization is not None and dataset.normalization.kind == "standard":
        return dataset.normalization.then(fitted)
    return fitted
