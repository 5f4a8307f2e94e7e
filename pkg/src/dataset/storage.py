"""
Labeled dataset container, generation and the PCDS file format
"""
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Tuple, Union

import numpy as np
from tqdm import tqdm

from ..utils.errors import FormatError, InvalidArgumentError, ValidationError
from .shapes import SHAPE_NAMES, generate_shape

logger = logging.getLogger(__name__)

MAGIC = b"PCDS"
VERSION = 1
HEADER = struct.Struct("<4sIIII")
LABEL = struct.Struct("<I")

SPLITS = ("train", "test")
# Seed ranges of the two splits never overlap
SPLIT_SEED_OFFSET = {"train": 0, "test": 1_000_000}


@dataclass
class LabeledDataset:
    """Stack of equally sized clouds with integer labels"""
    clouds: np.ndarray
    labels: np.ndarray
    n_classes: int
    split: str = "train"

    def __post_init__(self):
        self.clouds = np.ascontiguousarray(self.clouds, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.int64)

        if self.clouds.ndim != 3 or self.clouds.shape[2] != 3:
            raise ValidationError(f"clouds must be S x N x 3, got {self.clouds.shape}")
        if self.labels.shape != (self.clouds.shape[0],):
            raise ValidationError(f"{self.labels.shape[0]} labels for {self.clouds.shape[0]} clouds")
        if self.split not in SPLITS:
            raise InvalidArgumentError(f"unknown split '{self.split}', expected one of {SPLITS}")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValidationError(f"labels must lie in [0, {self.n_classes})")

    @property
    def n_points(self) -> int:
        return int(self.clouds.shape[1])

    @property
    def samples(self) -> List[Tuple[np.ndarray, int]]:
        return list(self)

    def __len__(self) -> int:
        return int(self.clouds.shape[0])

    def __getitem__(self, index: int) -> Tuple[np.ndarray, int]:
        return self.clouds[index], int(self.labels[index])

    def __iter__(self) -> Iterator[Tuple[np.ndarray, int]]:
        for index in range(len(self)):
            yield self[index]

    def subset(self, indices) -> "LabeledDataset":
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.clouds[indices], self.labels[indices], self.n_classes, self.split)


def sample_seed(base_seed: int, split: str, class_id: int, index: int, n_per_class: int) -> int:
    return base_seed + SPLIT_SEED_OFFSET[split] + class_id * n_per_class + index


def build_dataset(
    split: str,
    n_per_class: int,
    n_points: int = 256,
    noise_sigma: float = 0.02,
    base_seed: int = 0,
) -> LabeledDataset:
    """Synthetic split with n_per_class samples of each shape class"""
    if split not in SPLITS:
        raise InvalidArgumentError(f"unknown split '{split}', expected one of {SPLITS}")
    n_classes = len(SHAPE_NAMES)
    if n_per_class < 1 or n_classes * n_per_class > SPLIT_SEED_OFFSET["test"]:
        raise InvalidArgumentError(f"n_per_class out of range: {n_per_class}")

    clouds = np.empty((n_classes * n_per_class, n_points, 3), dtype=np.float32)
    labels = np.repeat(np.arange(n_classes), n_per_class)
    for row in tqdm(range(len(labels)), desc=f"generate {split}", leave=False,
                    disable=logging.getLogger().getEffectiveLevel() > logging.INFO):
        class_id, index = divmod(row, n_per_class)
        seed = sample_seed(base_seed, split, class_id, index, n_per_class)
        clouds[row] = generate_shape(class_id, n_points, seed, noise_sigma)

    logger.info(f"Generated {split} split: {len(labels)} clouds of {n_points} points")
    return LabeledDataset(clouds, labels, n_classes, split)


def save_dataset(dataset: LabeledDataset, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    chunks = [HEADER.pack(MAGIC, VERSION, len(dataset), dataset.n_points, dataset.n_classes)]
    for cloud, label in dataset:
        chunks.append(LABEL.pack(label))
        chunks.append(np.ascontiguousarray(cloud, dtype="<f4").tobytes())

    path.write_bytes(b"".join(chunks))
    logger.info(f"Saved {len(dataset)} samples to {path}")
    return path


def load_dataset(path: Union[str, Path], split: str = "test") -> LabeledDataset:
    """Parse a PCDS file; errors carry the byte offset and the sample index"""
    blob = Path(path).read_bytes()

    if len(blob) < 4 or blob[:4] != MAGIC:
        raise FormatError(f"bad magic, expected {MAGIC.decode()}", 0)
    if len(blob) < HEADER.size:
        raise FormatError("truncated header", len(blob))

    _, version, n_samples, n_points, n_classes = HEADER.unpack_from(blob, 0)
    if version != VERSION:
        raise FormatError(f"unsupported dataset version {version}", 4)

    if n_points == 0 or n_classes == 0:
        raise FormatError(f"header declares n_points={n_points}, n_classes={n_classes}", 12)

    cloud_bytes = n_points * 3 * 4
    expected = HEADER.size + n_samples * (LABEL.size + cloud_bytes)
    if expected > len(blob):
        # report the first sample that does not fit
        index = (len(blob) - HEADER.size) // (LABEL.size + cloud_bytes)
        raise FormatError(
            f"file truncated: header declares {n_samples} samples of {n_points} points",
            HEADER.size + index * (LABEL.size + cloud_bytes),
            sample_index=index,
        )

    clouds = np.empty((n_samples, n_points, 3), dtype=np.float32)
    labels = np.empty(n_samples, dtype=np.int64)

    offset = HEADER.size
    for index in range(n_samples):
        if offset + LABEL.size + cloud_bytes > len(blob):
            raise FormatError("file truncated mid-sample", offset, sample_index=index)
        (label,) = LABEL.unpack_from(blob, offset)
        if label >= n_classes:
            raise FormatError(f"label {label} out of range for {n_classes} classes", offset, sample_index=index)
        labels[index] = label
        offset += LABEL.size
        clouds[index] = np.frombuffer(blob, dtype="<f4", count=n_points * 3, offset=offset).reshape(n_points, 3)
        offset += cloud_bytes

    if offset != len(blob):
        raise FormatError(f"{len(blob) - offset} trailing bytes after the last sample", offset)

    return LabeledDataset(clouds, labels, n_classes, split)
