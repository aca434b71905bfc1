import math
import numpy as np

from .dataset import Dataset


def _class_means(classes: int, dim: int, separation: float) -> np.ndarray:
    means = np.zeros((classes, dim))
    if classes <= dim:
        # scaled simplex vertices: every pair of means is `separation` apart
        means[np.arange(classes), np.arange(classes)] = separation / math.sqrt(2.0)
        return means

    # more classes than axes: a ring in the first two coordinates with neighbours `separation` apart
    angles = 2.0 * math.pi * np.arange(classes) / classes
    radius = separation / (2.0 * math.sin(math.pi / classes))
    means[:, 0] = radius * np.cos(angles)
    if dim > 1:
        means[:, 1] = radius * np.sin(angles)

    return means


def synth(classes: int, dim: int, per_class: int, separation: float, rng: np.random.Generator) -> Dataset:
    if classes < 2 or dim < 1 or per_class < 0:
        raise ValueError(f"Need classes >= 2, dim >= 1 and per_class >= 0, got {classes}, {dim}, {per_class}.")

    if separation < 0.0:
        raise ValueError(f"Separation must be nonnegative, got {separation}.")

    means = _class_means(classes, dim, separation)
    labels = np.repeat(np.arange(classes), per_class)
    features = means[labels] + rng.standard_normal((labels.size, dim))

    order = rng.permutation(labels.size)
    return Dataset(features[order], labels[order], classes, source="synth")
