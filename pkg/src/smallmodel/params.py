import math
import numpy as np

from dataclasses import dataclass
from typing import Iterator, Mapping, Protocol

from ..utils.errors import DimensionMismatchError, NonFiniteError

LayerShape = tuple[str, tuple[int, ...]]


def _layer_size(dims: tuple[int, ...]) -> int:
    return math.prod(dims)


def descriptor_size(shapes: tuple[LayerShape, ...]) -> int:
    return sum(_layer_size(dims) for _, dims in shapes)


class Batch(Protocol):
    @property
    def features(self) -> np.ndarray: ...

    @property
    def labels(self) -> np.ndarray: ...


@dataclass(frozen=True)
class ExampleBatch:
    features: np.ndarray
    labels: np.ndarray


@dataclass(frozen=True)
class ParamVector:
    values: np.ndarray
    shapes: tuple[LayerShape, ...]

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size != descriptor_size(self.shapes):
            raise DimensionMismatchError(
                f"Vector of size {values.size} does not match layout of size {descriptor_size(self.shapes)}."
            )

        if not np.all(np.isfinite(values)):
            raise NonFiniteError("Parameter vector contains non-finite entries.")

        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, shapes: tuple[LayerShape, ...]) -> "ParamVector":
        return cls(np.zeros(descriptor_size(shapes)), shapes)

    @classmethod
    def from_layers(cls, layers: Mapping[str, np.ndarray], shapes: tuple[LayerShape, ...]) -> "ParamVector":
        parts = []
        for name, dims in shapes:
            layer = np.asarray(layers[name], dtype=np.float64)
            if layer.shape != dims:
                raise DimensionMismatchError(f"Layer {name} has shape {layer.shape}, expected {dims}.")

            parts.append(layer.ravel())

        return cls(np.concatenate(parts) if parts else np.zeros(0), shapes)

    def __len__(self) -> int:
        return int(self.values.size)

    def layers(self) -> dict[str, np.ndarray]:
        return dict(_split_layers(self.values, self.shapes))

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def with_values(self, values: np.ndarray) -> "ParamVector":
        return ParamVector(values, self.shapes)

    def check_compatible(self, other: "ParamVector") -> None:
        if self.shapes != other.shapes:
            raise DimensionMismatchError(f"Layouts differ: {self.shapes} vs {other.shapes}.")


def _split_layers(values: np.ndarray, shapes: tuple[LayerShape, ...]) -> Iterator[tuple[str, np.ndarray]]:
    offset = 0
    for name, dims in shapes:
        size = _layer_size(dims)
        yield name, values[offset : offset + size].reshape(dims)
        offset += size


@dataclass(frozen=True)
class GradientBatch:
    rows: np.ndarray
    shapes: tuple[LayerShape, ...]

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != descriptor_size(self.shapes):
            raise DimensionMismatchError(f"Gradient rows of shape {rows.shape} do not match the layout.")

        object.__setattr__(self, "rows", rows)

    @classmethod
    def empty(cls, shapes: tuple[LayerShape, ...]) -> "GradientBatch":
        return cls(np.zeros((0, descriptor_size(shapes))), shapes)

    def __len__(self) -> int:
        return int(self.rows.shape[0])

    def __getitem__(self, ix: int) -> ParamVector:
        return ParamVector(self.rows[ix].copy(), self.shapes)

    def __iter__(self) -> Iterator[ParamVector]:
        return (self[ix] for ix in range(len(self)))

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.rows, axis=1)

    def total(self) -> np.ndarray:
        return self.rows.sum(axis=0)

    def mean(self) -> ParamVector:
        return ParamVector(self.rows.mean(axis=0), self.shapes)
