"""Dataset generators and loaders: Tai Ji grid, XOR corners, IDX files."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass

import numpy as np

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """Malformed IDX image or label payload."""


@dataclass
class LabeledDataset:
    """Feature array plus integer class labels."""

    x: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1 or len(self.labels) != len(self.x):
            raise ValueError("labels must be a vector aligned with the points")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValueError("labels must lie in [0, n_classes)")

    def __len__(self) -> int:
        return len(self.labels)


# ---------------------------------------------------------------------------
# Tai Ji benchmark
# ---------------------------------------------------------------------------
#
# Points are the grid (i/R, j/R), i, j in [-R, R], strictly inside the unit
# disk.  Class 1 is the classic S-curve yin half: the upper eye disk, plus
# the left half-plane minus the left part of the lower eye disk.  Boundary
# tests on the eye circles follow the strict/non-strict pattern below, and
# the origin lands in class 0.

def taiji_label(x: float, y: float) -> int:
    """Class of a point strictly inside the unit disk."""
    if x * x + y * y >= 1.0:
        raise ValueError(f"point ({x}, {y}) is not strictly inside the unit disk")
    upper_eye = x * x + (y - 0.5) ** 2 < 0.25
    lower_eye = x * x + (y + 0.5) ** 2 < 0.25
    return 1 if (upper_eye or (not lower_eye and x < 0.0)) else 0


def _grid_label(i: int, j: int, r: int) -> int:
    # same rule as taiji_label on x=i/r, y=j/r, in exact integer arithmetic
    upper_eye = 4 * i * i + (2 * j - r) ** 2 < r * r
    lower_eye = 4 * i * i + (2 * j + r) ** 2 < r * r
    return 1 if (upper_eye or (not lower_eye and i < 0)) else 0


def gen_taiji(r: int) -> LabeledDataset:
    """Tai Ji dataset on a grid of reciprocal step r (r=20 -> step 0.05).

    Membership in the open unit disk is decided in exact integer arithmetic
    (i*i + j*j < r*r), and points are emitted row-major: j ascending in the
    outer loop, i ascending in the inner loop.
    """
    if r < 1:
        raise ValueError("grid reciprocal must be >= 1")
    points = []
    labels = []
    rr = r * r
    for j in range(-r, r + 1):
        for i in range(-r, r + 1):
            if i * i + j * j < rr:
                points.append((i / r, j / r))
                labels.append(_grid_label(i, j, r))
    return LabeledDataset(np.array(points, dtype=np.float64),
                          np.array(labels, dtype=np.int64), 2)


def gen_xor() -> LabeledDataset:
    """The four XOR corners with labels 0, 1, 1, 0."""
    points = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    labels = np.array([0, 1, 1, 0])
    return LabeledDataset(points, labels, 2)


# ---------------------------------------------------------------------------
# IDX image/label files
# ---------------------------------------------------------------------------

def _read_header(data: bytes, name: str, fields: int):
    size = 4 * fields
    if len(data) < size:
        raise IdxFormatError(f"truncated {name} header: {len(data)} bytes, need {size}")
    return struct.unpack(f">{fields}i", data[:size]), data[size:]


def load_idx(image_bytes: bytes, label_bytes: bytes, n_classes: int = 10) -> LabeledDataset:
    """Decode an IDX image file and its label file into a dataset.

    Pixels are scaled to [0, 1] and shaped (count, 1, rows, cols); the label
    count must match the image count.
    """
    (magic, count, rows, cols), image_payload = _read_header(image_bytes, "image", 4)
    if magic != IDX_IMAGE_MAGIC:
        raise IdxFormatError(
            f"bad image magic number 0x{magic & 0xffffffff:08x} (expected 0x{IDX_IMAGE_MAGIC:08x})")
    if count < 0 or rows < 0 or cols < 0:
        raise IdxFormatError("negative count or dimensions in image header")
    expected = count * rows * cols
    if len(image_payload) != expected:
        raise IdxFormatError(
            f"truncated image payload: {len(image_payload)} bytes, need {expected}")

    (lmagic, lcount), label_payload = _read_header(label_bytes, "label", 2)
    if lmagic != IDX_LABEL_MAGIC:
        raise IdxFormatError(
            f"bad label magic number 0x{lmagic & 0xffffffff:08x} (expected 0x{IDX_LABEL_MAGIC:08x})")
    if len(label_payload) != lcount:
        raise IdxFormatError(
            f"truncated label payload: {len(label_payload)} bytes, need {lcount}")
    if count != lcount:
        raise IdxFormatError(f"image/label count mismatch: {count} images vs {lcount} labels")

    images = np.frombuffer(image_payload, dtype=np.uint8).reshape(count, rows, cols)
    x = images.astype(np.float64)[:, None, :, :] / 255.0
    labels = np.frombuffer(label_payload, dtype=np.uint8).astype(np.int64)
    if count == 0:
        return LabeledDataset(x.reshape(0, 1, rows, cols), labels, n_classes)
    return LabeledDataset(x, labels, n_classes)


def _read_file(path) -> bytes:
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rb") as fh:
        return fh.read()


def load_idx_files(image_path, label_path, n_classes: int = 10) -> LabeledDataset:
    """load_idx from paths; .gz files are decompressed transparently."""
    return load_idx(_read_file(image_path), _read_file(label_path), n_classes)


def images_to_idx_bytes(images: np.ndarray) -> bytes:
    """Serialize a (count, rows, cols) uint8 stack into IDX image bytes."""
    images = np.asarray(images)
    if images.ndim != 3:
        raise ValueError("images must have shape (count, rows, cols)")
    if images.dtype != np.uint8:
        raise ValueError("images must be uint8")
    count, rows, cols = images.shape
    header = struct.pack(">4i", IDX_IMAGE_MAGIC, count, rows, cols)
    return header + images.tobytes()


def labels_to_idx_bytes(labels: np.ndarray) -> bytes:
    """Serialize a label vector (values 0..255) into IDX label bytes."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError("labels must be a vector")
    if len(labels) and (labels.min() < 0 or labels.max() > 255):
        raise ValueError("labels must fit in one byte")
    header = struct.pack(">2i", IDX_LABEL_MAGIC, len(labels))
    return header + labels.astype(np.uint8).tobytes()
