import functools as ft
import math
import numpy as np

from dataclasses import dataclass, field
from scipy.special import gammaln, logsumexp

from ..utils.errors import InvalidCostError, InvalidOrderError, RdpOverflowError

MIN_ORDER = 2
MAX_DEFAULT_ORDER = 64


def _default_orders() -> tuple[int, ...]:
    return tuple(range(MIN_ORDER, MAX_DEFAULT_ORDER + 1))


@dataclass(frozen=True)
class RdpOrderGrid:
    orders: tuple[int, ...] = field(default_factory=_default_orders)

    def __post_init__(self) -> None:
        if not self.orders:
            raise InvalidOrderError("The order grid is empty.")

        for order in self.orders:
            _check_order(order)

        if any(a >= b for a, b in zip(self.orders, self.orders[1:])):
            raise InvalidOrderError(f"Orders must be strictly increasing, got {self.orders}.")

    def __len__(self) -> int:
        return len(self.orders)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.orders, dtype=np.float64)


@dataclass(frozen=True)
class RoundCost:
    q: float
    sigma: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.q) and 0.0 <= self.q <= 1.0):
            raise InvalidCostError(f"Sampling ratio q={self.q} is outside [0, 1].")

        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise InvalidCostError(f"Noise scale sigma={self.sigma} must be positive.")


def _check_order(order: int) -> None:
    if isinstance(order, bool) or not isinstance(order, (int, np.integer)) or order < MIN_ORDER:
        raise InvalidOrderError(f"RDP order must be an integer >= {MIN_ORDER}, got {order!r}.")


def sgm_rdp(cost: RoundCost, order: int) -> float:
    _check_order(order)
    return _sgm_rdp(cost.q, cost.sigma, int(order))


def sgm_rdp_grid(cost: RoundCost, grid: RdpOrderGrid) -> tuple[np.ndarray, np.ndarray]:
    values, usable = _sgm_rdp_grid(cost.q, cost.sigma, grid.orders)
    return values.copy(), usable.copy()


@ft.lru_cache(maxsize=1024)
def _sgm_rdp_grid(q: float, sigma: float, orders: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    values = np.zeros(len(orders), dtype=np.float64)
    usable = np.ones(len(orders), dtype=bool)
    for ix, order in enumerate(orders):
        try:
            values[ix] = _sgm_rdp(q, sigma, order)

        except RdpOverflowError:
            usable[ix] = False
            values[ix] = np.inf

    values.flags.writeable = False
    usable.flags.writeable = False
    return values, usable


def _sgm_rdp(q: float, sigma: float, order: int) -> float:
    if q == 0.0:
        return 0.0

    if q == 1.0:
        # Plain Gaussian mechanism: only the k = order term survives.
        return order / (2.0 * sigma**2)

    log_a_minus_one = _log_a_minus_one(q, sigma, order)
    log_a = float(np.logaddexp(0.0, log_a_minus_one))
    if not math.isfinite(log_a):
        raise RdpOverflowError(f"A_alpha overflows for q={q}, sigma={sigma}, order={order}.")

    return max(log_a / (order - 1), 0.0)


def _log_a_minus_one(q: float, sigma: float, order: int) -> float:
    """log(A_alpha - 1), summing only the terms k >= 2 whose exponential factor exceeds one.

    The binomial weights sum to one, so A_alpha - 1 = sum_k w_k * expm1((k^2 - k) / (2 sigma^2)) and the
    k = 0, 1 terms vanish. Working with the excess keeps full relative precision when A_alpha is close to 1.
    """
    k = np.arange(2, order + 1, dtype=np.float64)
    log_binom = gammaln(order + 1) - gammaln(k + 1) - gammaln(order - k + 1)
    log_weights = log_binom + (order - k) * math.log1p(-q) + k * math.log(q)

    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        exponent = (k * k - k) / (2.0 * sigma**2)
        log_expm1 = exponent + np.log(-np.expm1(-exponent))
        return float(logsumexp(log_weights + log_expm1))
