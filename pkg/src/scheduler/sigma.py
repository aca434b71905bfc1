import math

from dataclasses import dataclass, replace

HISTORY_WINDOW = 4
INITIAL_LOSSES = (math.inf, math.inf, math.inf)


@dataclass(frozen=True)
class SigmaState:
    """sigma always equals sigma_initial multiplied by beta once per decay, in that evaluation order."""

    sigma_initial: float
    beta: float
    sigma: float
    loss_history: tuple[float, ...] = INITIAL_LOSSES
    decay_count: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sigma_initial) and self.sigma_initial >= 0.0):
            raise ValueError(f"Initial noise scale must be finite and nonnegative, got {self.sigma_initial}.")

        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"Decay factor beta={self.beta} must lie in (0, 1].")

    @classmethod
    def initial(cls, sigma0: float, beta: float) -> "SigmaState":
        return cls(sigma_initial=sigma0, beta=beta, sigma=sigma0)

    @classmethod
    def constant(cls, sigma: float) -> "SigmaState":
        return cls(sigma_initial=sigma, beta=1.0, sigma=sigma)


def is_strictly_decreasing(losses: tuple[float, ...]) -> bool:
    return all(a > b for a, b in zip(losses, losses[1:]))


def observe_loss(state: SigmaState, loss: float) -> SigmaState:
    if not math.isfinite(loss):
        raise ValueError(f"Validation loss must be finite, got {loss}.")

    history = (state.loss_history + (loss,))[-HISTORY_WINDOW:]
    # sentinels never count as a decrease; windows of finite losses overlap
    full = len(history) == HISTORY_WINDOW and all(map(math.isfinite, history))
    if full and is_strictly_decreasing(history) and state.beta < 1.0:
        return replace(state, sigma=state.beta * state.sigma, loss_history=history, decay_count=state.decay_count + 1)

    return replace(state, loss_history=history)


def current_sigma(state: SigmaState) -> float:
    return state.sigma
