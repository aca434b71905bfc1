import numpy as np

from dataclasses import dataclass, replace

from .params import ParamVector
from ..utils.enums import OptimizerKind
from ..utils.errors import DimensionMismatchError

ADAM_BETAS = (0.9, 0.999)
ADAM_EPSILON = 1e-8


@dataclass(frozen=True)
class OptimizerState:
    kind: OptimizerKind
    learning_rate: float
    step: int = 0
    first_moment: np.ndarray | None = None
    second_moment: np.ndarray | None = None
    betas: tuple[float, float] = ADAM_BETAS
    epsilon_hat: float = ADAM_EPSILON

    def __post_init__(self) -> None:
        if self.learning_rate <= 0.0:
            raise ValueError(f"Learning rate must be positive, got {self.learning_rate}.")

        if not all(0.0 <= beta < 1.0 for beta in self.betas):
            raise ValueError(f"Adam betas must lie in [0, 1), got {self.betas}.")


def init_optimizer(
    kind: OptimizerKind,
    learning_rate: float,
    size: int,
    betas: tuple[float, float] = ADAM_BETAS,
    epsilon_hat: float = ADAM_EPSILON,
) -> OptimizerState:
    if kind is OptimizerKind.SGD:
        return OptimizerState(kind=kind, learning_rate=learning_rate)

    return OptimizerState(
        kind=kind,
        learning_rate=learning_rate,
        first_moment=np.zeros(size),
        second_moment=np.zeros(size),
        betas=betas,
        epsilon_hat=epsilon_hat,
    )


def apply_update(
    params: ParamVector, opt: OptimizerState, gradient: ParamVector
) -> tuple[ParamVector, OptimizerState]:
    params.check_compatible(gradient)
    g = gradient.values

    match opt.kind:
        case OptimizerKind.SGD:
            return params.with_values(params.values - opt.learning_rate * g), replace(opt, step=opt.step + 1)

        case OptimizerKind.ADAM:
            if opt.first_moment is None or opt.second_moment is None or opt.first_moment.size != g.size:
                raise DimensionMismatchError(f"Adam moments do not match a gradient of size {g.size}.")

            beta1, beta2 = opt.betas
            step = opt.step + 1
            first = beta1 * opt.first_moment + (1.0 - beta1) * g
            second = beta2 * opt.second_moment + (1.0 - beta2) * g * g
            first_hat = first / (1.0 - beta1**step)
            second_hat = second / (1.0 - beta2**step)

            values = params.values - opt.learning_rate * first_hat / (np.sqrt(second_hat) + opt.epsilon_hat)
            return params.with_values(values), replace(opt, step=step, first_moment=first, second_moment=second)

    raise ValueError(f"Unknown optimizer kind {opt.kind}.")
