from .clipping import clip, clip_batch, noisy_mean
from .sampler import GaussianSampler
from .threshold import DEFAULT_FLOOR, ClipConfig, ClipState, init_threshold, next_threshold
