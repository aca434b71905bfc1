import numpy as np
import struct

from pathlib import Path

from .dataset import Dataset
from ..utils.errors import IdxFormatError

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
PIXEL_SCALE = 255.0
MNIST_CLASSES = 10


def _read_header(data: bytes, path: Path, magic: int, dims: int) -> tuple[int, ...]:
    header_size = 4 * (dims + 1)
    if len(data) < header_size:
        raise IdxFormatError(f"{path} is truncated: {len(data)} bytes cannot hold an IDX header.")

    found, *sizes = struct.unpack(f">{dims + 1}I", data[:header_size])
    if found != magic:
        raise IdxFormatError(f"{path} has magic 0x{found:08x}, expected 0x{magic:08x}.")

    return tuple(sizes)


def _read_payload(data: bytes, path: Path, offset: int, count: int) -> np.ndarray:
    if len(data) - offset < count:
        raise IdxFormatError(f"{path} is truncated: expected {count} payload bytes, found {len(data) - offset}.")

    return np.frombuffer(data, dtype=np.uint8, count=count, offset=offset)


def load_idx(images_path: Path, labels_path: Path, num_classes: int = MNIST_CLASSES, source: str = "idx") -> Dataset:
    image_bytes = Path(images_path).read_bytes()
    label_bytes = Path(labels_path).read_bytes()

    count, rows, cols = _read_header(image_bytes, images_path, IMAGES_MAGIC, 3)
    (label_count,) = _read_header(label_bytes, labels_path, LABELS_MAGIC, 1)
    if count != label_count:
        raise IdxFormatError(f"{images_path} holds {count} images but {labels_path} holds {label_count} labels.")

    pixels = _read_payload(image_bytes, images_path, 16, count * rows * cols)
    labels = _read_payload(label_bytes, labels_path, 8, count)
    if labels.size and labels.max() >= num_classes:
        raise IdxFormatError(f"{labels_path} contains label {labels.max()} outside {num_classes} classes.")

    features = pixels.reshape(count, rows * cols).astype(np.float64) / PIXEL_SCALE
    return Dataset(features, labels.astype(np.int64), num_classes, source)


def write_idx(dataset: Dataset, images_path: Path, labels_path: Path, rows: int, cols: int) -> None:
    if rows * cols != dataset.dim:
        raise ValueError(f"{rows}x{cols} images cannot hold {dataset.dim} features.")

    pixels = np.rint(dataset.features * PIXEL_SCALE)
    if pixels.size and (pixels.min() < 0 or pixels.max() > PIXEL_SCALE):
        raise ValueError("Features must lie in [0, 1] to be written as IDX pixels.")

    Path(images_path).write_bytes(
        struct.pack(">4I", IMAGES_MAGIC, len(dataset), rows, cols) + pixels.astype(np.uint8).tobytes()
    )
    labels = dataset.labels.astype(np.uint8).tobytes()
    Path(labels_path).write_bytes(struct.pack(">2I", LABELS_MAGIC, len(dataset)) + labels)
