import numpy as np

from dataclasses import dataclass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    source: str = "memory"

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64)
        if features.ndim != 2 or labels.shape != (features.shape[0],):
            raise ValueError(f"Features {features.shape} and labels {labels.shape} are not aligned.")

        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise ValueError(f"Labels must lie in [0, {self.num_classes}).")

        features.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.labels.size)

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def subset(self, indices: np.ndarray) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.labels[indices], self.num_classes, self.source)


def split_holdout(dataset: Dataset, size: int, rng: np.random.Generator) -> tuple[Dataset, Dataset]:
    if not 0 <= size <= len(dataset):
        raise ValueError(f"Cannot hold out {size} of {len(dataset)} examples.")

    order = rng.permutation(len(dataset))
    return dataset.subset(np.sort(order[:size])), dataset.subset(np.sort(order[size:]))


def train_test_split(dataset: Dataset, test_fraction: float, rng: np.random.Generator) -> tuple[Dataset, Dataset]:
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction={test_fraction} must lie in (0, 1).")

    test, train = split_holdout(dataset, int(round(test_fraction * len(dataset))), rng)
    return train, test
