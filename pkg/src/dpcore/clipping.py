import math
import numpy as np

from .sampler import GaussianSampler
from ..smallmodel.params import GradientBatch, ParamVector
from ..utils.errors import ClipViolationError, NonFiniteError

CLIP_SLACK = 1e-12
VIOLATION_TOLERANCE = 1e-9


def _check_threshold(threshold: float) -> None:
    if not (math.isfinite(threshold) and threshold > 0.0):
        raise ValueError(f"Clipping threshold must be finite and positive, got {threshold}.")


def _scale_factors(norms: np.ndarray, threshold: float) -> np.ndarray:
    factors = np.maximum(1.0, norms / threshold)
    # rows within slack of the threshold stay bit-for-bit unchanged
    return np.where(norms <= threshold + CLIP_SLACK * min(threshold, 1.0), 1.0, factors)


def clip(gradient: ParamVector, threshold: float) -> ParamVector:
    _check_threshold(threshold)
    factor = float(_scale_factors(np.asarray([gradient.norm()]), threshold)[0])
    if factor == 1.0:
        return gradient

    return gradient.with_values(gradient.values / factor)


def clip_batch(gradients: GradientBatch, threshold: float) -> GradientBatch:
    _check_threshold(threshold)
    if not np.all(np.isfinite(gradients.rows)):
        raise NonFiniteError("Per-sample gradients contain non-finite entries.")

    factors = _scale_factors(gradients.norms(), threshold)
    return GradientBatch(gradients.rows / factors[:, None], gradients.shapes)


def noisy_mean(
    clipped: GradientBatch, threshold: float, sigma: float, lot_size: int, rng: GaussianSampler
) -> ParamVector:
    """(sum of clipped rows + N(0, (sigma * threshold)^2) per coordinate) / lot_size.

    The divisor is the nominal lot size, so the sensitivity stays threshold / lot_size whatever the realized count.
    """
    _check_threshold(threshold)
    if lot_size < 1:
        raise ValueError(f"Lot size must be positive, got {lot_size}.")

    norms = clipped.norms()
    if norms.size and norms.max() > threshold * (1.0 + VIOLATION_TOLERANCE) + CLIP_SLACK:
        raise ClipViolationError(f"A gradient of norm {norms.max()} exceeds the threshold {threshold}.")

    noise = rng.normal(sigma * threshold, clipped.rows.shape[1])
    return ParamVector((clipped.total() + noise) / lot_size, clipped.shapes)
