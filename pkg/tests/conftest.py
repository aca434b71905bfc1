import numpy as np
import pytest

from pathlib import Path
from typing import Any, Callable

from src.configs.config import validate_config
from src.configs.models import ExperimentConfig
from src.datasets.dataset import Dataset
from src.datasets.idx import write_idx

TINY_CONFIG: dict[str, Any] = {
    "dataset": {"source": "synth", "classes": 2, "dim": 5, "per_class": 50, "separation": 4.0},
    "partition": {"clients": 2, "shards": 8, "shards_per_client": 4, "lot_size": 10},
    "model": {"kind": "logistic"},
    "optimizer": {"kind": "adam", "learning_rate": 0.05},
    "clipping": {"mode": "adaptive", "clip_factor": 1.0},
    "noise": {"mode": "adaptive", "sigma0": 2.0, "beta": 0.99},
    "privacy": {"epsilon": 8.0, "delta": 1e-5},
    "run": {"rounds": 5, "seed": 0},
}


def nested_update(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = {section: dict(values) for section, values in base.items()}
    for dotted_key, value in overrides.items():
        section, key = dotted_key.split(".")
        merged.setdefault(section, {})[key] = value

    return merged


@pytest.fixture
def make_config(tmp_path: Path) -> Callable[..., ExperimentConfig]:
    """Tiny synth experiment writing below tmp_path; keyword overrides use `section__key` names."""

    def factory(**overrides: Any) -> ExperimentConfig:
        dotted = {key.replace("__", "."): value for key, value in overrides.items()}
        dotted.setdefault("run.output_dir", str(tmp_path / "run"))
        return validate_config(nested_update(TINY_CONFIG, dotted))

    return factory


def pixel_dataset(size: int, dim: int, num_classes: int, seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, (size, dim))
    labels = np.arange(size) % num_classes
    return Dataset(pixels / 255.0, labels, num_classes, source="mnist")


@pytest.fixture
def idx_files(tmp_path: Path) -> dict[str, Path]:
    """Small MNIST-shaped IDX files: 200 training and 40 test images of 4x4 pixels over 10 classes."""

    folder = tmp_path / "idx"
    folder.mkdir()
    files = {
        "train_images": folder / "train-images-idx3-ubyte",
        "train_labels": folder / "train-labels-idx1-ubyte",
        "test_images": folder / "t10k-images-idx3-ubyte",
        "test_labels": folder / "t10k-labels-idx1-ubyte",
    }
    write_idx(pixel_dataset(200, 16, 10, seed=1), files["train_images"], files["train_labels"], 4, 4)
    write_idx(pixel_dataset(40, 16, 10, seed=2), files["test_images"], files["test_labels"], 4, 4)
    return files
