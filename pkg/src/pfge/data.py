"""Synthetic dataset generators, CSV/IDX ingestion, and seeded batching."""

import csv
import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DataFormatError, InvalidArgumentError
from .nn import Batch
from .rng import STREAM_DATA, STREAM_SHUFFLE, stream_rng


@dataclass(frozen=True)
class Dataset:
    """Labeled examples: an (N, D) feature matrix plus integer class labels."""

    inputs: np.ndarray
    labels: np.ndarray
    classes: int
    name: str = "dataset"

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if inputs.ndim != 2 or inputs.shape[0] < 1:
            raise InvalidArgumentError(f"inputs must be a nonempty 2-D array, got {inputs.shape}")
        if labels.shape != (inputs.shape[0],):
            raise InvalidArgumentError(
                f"labels shape {labels.shape} does not match {inputs.shape[0]} rows"
            )
        if not np.all(np.isfinite(inputs)):
            raise InvalidArgumentError("features contain non-finite values")
        if self.classes < 1 or labels.min() < 0 or labels.max() >= self.classes:
            raise InvalidArgumentError(
                f"labels must lie in [0, {self.classes})"
            )
        inputs = inputs.copy()
        labels = labels.copy()
        inputs.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_features(self) -> int:
        return self.inputs.shape[1]


def gen_two_spirals(n_per_class: int, noise_sd: float, seed: int) -> Dataset:
    """Two interleaved planar spirals, one per class.

    Class 1 is the half-turn rotation of class 0; Gaussian noise with standard
    deviation ``noise_sd`` is added independently to every coordinate.
    Deterministic in ``seed``.
    """
    if n_per_class < 1:
        raise InvalidArgumentError(f"n_per_class must be >= 1, got {n_per_class}")
    if noise_sd < 0:
        raise InvalidArgumentError("noise_sd must be nonnegative")
    t = np.arange(n_per_class) / n_per_class
    radius = 0.2 + 0.8 * t
    angle = 3.0 * np.pi * t
    arm = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    points = np.vstack([arm, -arm])
    if noise_sd > 0:
        rng = stream_rng(seed, STREAM_DATA)
        points = points + rng.normal(0.0, noise_sd, size=points.shape)
    labels = np.repeat([0, 1], n_per_class)
    return Dataset(points, labels, classes=2, name="two_spirals")


def gen_blobs(centers, n_per_class: int, sd: float, seed: int) -> Dataset:
    """Isotropic Gaussian clusters; the label of a point is its center index."""
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    if centers.size == 0:
        raise InvalidArgumentError("centers must be nonempty")
    if n_per_class < 1:
        raise InvalidArgumentError(f"n_per_class must be >= 1, got {n_per_class}")
    if sd < 0:
        raise InvalidArgumentError("sd must be nonnegative")
    rng = stream_rng(seed, STREAM_DATA)
    chunks = []
    for center in centers:
        noise = rng.normal(0.0, 1.0, size=(n_per_class, centers.shape[1]))
        chunks.append(center + sd * noise)
    labels = np.repeat(np.arange(len(centers)), n_per_class)
    return Dataset(np.vstack(chunks), labels, classes=len(centers), name="blobs")


def load_csv(path) -> Dataset:
    """Load a dataset from CSV with header ``f0,...,f{D-1},label``.

    Row order is preserved. Labels must be nonnegative integers; the class
    count is inferred as ``max(label) + 1``.
    """
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        n_features = len(header) - 1
        expected = [f"f{i}" for i in range(n_features)] + ["label"]
        if n_features < 1 or header != expected:
            raise DataFormatError(
                f"{path}: header must be f0,...,f{{D-1}},label, got {header}"
            )
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}"
                )
            try:
                rows.append([float(cell) for cell in row[:-1]])
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: non-numeric feature cell") from None
            try:
                label = int(row[-1])
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: non-integer label {row[-1]!r}") from None
            if label < 0:
                raise DataFormatError(f"{path}:{lineno}: negative label {label}")
            labels.append(label)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    labels = np.asarray(labels, dtype=np.int64)
    return Dataset(np.asarray(rows), labels, classes=int(labels.max()) + 1, name=str(path))


def save_csv(ds: Dataset, path) -> None:
    """Write a dataset in the schema ``load_csv`` reads; floats use repr precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i}" for i in range(ds.n_features)] + ["label"])
        for x, y in zip(ds.inputs, ds.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])


_IDX_IMAGE_MAGIC = 0x00000803
_IDX_LABEL_MAGIC = 0x00000801


def _read_exact(fh, count: int, path, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise DataFormatError(f"{path}: truncated file while reading {what}")
    return data


def load_idx(images_path, labels_path) -> Dataset:
    """Load an MNIST-style IDX image/label file pair.

    Both files are big-endian: magic, dimension sizes, then raw unsigned
    bytes. Pixels are scaled to [0, 1]; the class count is inferred as
    ``max(label) + 1``.
    """
    with open(images_path, "rb") as fh:
        (magic,) = struct.unpack(">I", _read_exact(fh, 4, images_path, "magic"))
        if magic != _IDX_IMAGE_MAGIC:
            raise DataFormatError(
                f"{images_path}: bad image magic 0x{magic:08x}, expected 0x{_IDX_IMAGE_MAGIC:08x}"
            )
        n_images, n_rows, n_cols = struct.unpack(
            ">III", _read_exact(fh, 12, images_path, "dimensions")
        )
        pixels = _read_exact(fh, n_images * n_rows * n_cols, images_path, "pixel data")
    with open(labels_path, "rb") as fh:
        (magic,) = struct.unpack(">I", _read_exact(fh, 4, labels_path, "magic"))
        if magic != _IDX_LABEL_MAGIC:
            raise DataFormatError(
                f"{labels_path}: bad label magic 0x{magic:08x}, expected 0x{_IDX_LABEL_MAGIC:08x}"
            )
        (n_labels,) = struct.unpack(">I", _read_exact(fh, 4, labels_path, "count"))
        label_bytes = _read_exact(fh, n_labels, labels_path, "label data")
    if n_images != n_labels:
        raise DataFormatError(
            f"image count {n_images} does not match label count {n_labels}"
        )
    inputs = np.frombuffer(pixels, dtype=np.uint8).astype(np.float64) / 255.0
    inputs = inputs.reshape(n_images, n_rows * n_cols)
    labels = np.frombuffer(label_bytes, dtype=np.uint8).astype(np.int64)
    return Dataset(inputs, labels, classes=int(labels.max()) + 1, name=str(images_path))


def feature_stats(ds: Dataset):
    """Per-feature mean and standard deviation, with the deviation floored to
    keep standardization well defined for constant features."""
    mean = ds.inputs.mean(axis=0)
    std = ds.inputs.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return mean, std


def apply_standardization(ds: Dataset, mean, std) -> Dataset:
    mean = np.asarray(mean, dtype=np.float64)
    std = np.asarray(std, dtype=np.float64)
    return Dataset((ds.inputs - mean) / std, ds.labels, ds.classes, ds.name)


class BatchStream:
    """Reproducible mini-batch iterator.

    Every epoch visits the whole dataset in a fresh seeded permutation; the
    final short batch is included. Iterating the stream yields batches
    indefinitely, rolling over epoch boundaries. The permutation sequence is
    a pure function of ``seed``, and each call to ``iter()`` replays it from
    the start.
    """

    def __init__(self, dataset: Dataset, batch_size: int, seed: int):
        if not (1 <= batch_size <= len(dataset)):
            raise ConfigurationError(
                f"batch_size must be in [1, {len(dataset)}], got {batch_size}"
            )
        self.dataset = dataset
        self.batch_size = batch_size
        self.seed = seed

    @property
    def iterations_per_epoch(self) -> int:
        return math.ceil(len(self.dataset) / self.batch_size)

    def __iter__(self):
        rng = stream_rng(self.seed, STREAM_SHUFFLE)
        n = len(self.dataset)
        while True:
            perm = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                idx = perm[start : start + self.batch_size]
                yield Batch(self.dataset.inputs[idx], self.dataset.labels[idx])


def batches(ds: Dataset, batch_size: int, seed: int) -> BatchStream:
    """Construct a seeded batch stream over ``ds``."""
    return BatchStream(ds, batch_size, seed)
