import math
import numpy as np

from dataclasses import dataclass
from pydantic import BaseModel, ConfigDict, Field

from .sampler import GaussianSampler
from ..smallmodel.models import Model
from ..smallmodel.params import ExampleBatch, ParamVector
from ..utils.errors import NonFiniteError

DEFAULT_FLOOR = 1e-6


class ClipConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    clip_factor: float = Field(1.0, gt=0.0)
    floor: float = Field(DEFAULT_FLOOR, gt=0.0)


@dataclass(frozen=True)
class ClipState:
    threshold: float
    previous_sigma: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.threshold) and self.threshold > 0.0):
            raise ValueError(f"Clipping threshold must be finite and positive, got {self.threshold}.")

        if not (math.isfinite(self.previous_sigma) and self.previous_sigma >= 0.0):
            raise ValueError(f"Noise scale must be finite and nonnegative, got {self.previous_sigma}.")


def next_threshold(
    prev_per_sample_norms: np.ndarray,
    state: ClipState,
    cfg: ClipConfig,
    sigma_prev: float,
    lot_size: int,
    rng: GaussianSampler,
) -> ClipState:
    """C_t = clip_factor * |(sum_i min(norm_i, C_{t-1}) + N(0, (C_{t-1} * sigma_{t-1})^2)) / L|, floored."""

    norms = np.asarray(prev_per_sample_norms, dtype=np.float64)
    if not np.all(np.isfinite(norms)):
        raise NonFiniteError("Previous per-sample gradient norms contain non-finite entries.")

    if lot_size < 1:
        raise ValueError(f"Lot size must be positive, got {lot_size}.")

    clipped_total = float(np.minimum(norms, state.threshold).sum())
    noise = rng.scalar(state.threshold * sigma_prev)
    noisy_mean_norm = (clipped_total + noise) / lot_size

    threshold = max(cfg.clip_factor * abs(noisy_mean_norm), cfg.floor)
    return ClipState(threshold=threshold, previous_sigma=sigma_prev)


def init_threshold(
    model: Model, params: ParamVector, cfg: ClipConfig, lot_size: int, rng: GaussianSampler
) -> ClipState:
    """The synthetic lot carries no client data, so this consumes no privacy budget."""

    if lot_size < 1:
        raise ValueError(f"Lot size must be positive, got {lot_size}.")

    features = rng.standard_normal((lot_size, model.input_dim))
    labels = rng.integers(model.num_classes, lot_size)
    gradients, _ = model.per_sample_gradients(params, ExampleBatch(features, labels))

    threshold = max(cfg.clip_factor * float(gradients.norms().mean()), cfg.floor)
    return ClipState(threshold=threshold)
