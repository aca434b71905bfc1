import numpy as np


class GaussianSampler:
    def __init__(self, seed: int | np.random.SeedSequence) -> None:
        self._seed_sequence = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        self._generator = np.random.default_rng(self._seed_sequence)

    def normal(self, std: float, size: int | tuple[int, ...] | None = None) -> np.ndarray:
        if std < 0.0 or not np.isfinite(std):
            raise ValueError(f"Standard deviation must be finite and nonnegative, got {std}.")

        return np.asarray(self._generator.normal(0.0, std, size), dtype=np.float64)

    def scalar(self, std: float) -> float:
        return float(self.normal(std))

    def standard_normal(self, shape: tuple[int, ...]) -> np.ndarray:
        return self._generator.standard_normal(shape)

    def integers(self, high: int, size: int) -> np.ndarray:
        return self._generator.integers(0, high, size)

    def spawn(self, n: int) -> list["GaussianSampler"]:
        return [GaussianSampler(child) for child in self._seed_sequence.spawn(n)]
