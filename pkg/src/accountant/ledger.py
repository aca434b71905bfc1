import math
import numpy as np

from dataclasses import dataclass
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field
from typing import Iterable

from .rdp import RdpOrderGrid, RoundCost, sgm_rdp_grid
from ..utils.errors import InvalidCostError, NoUsableOrderError

DEFAULT_DELTA = 1e-5


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class PrivacyLedger:
    """Orders that overflowed for some composed round are flagged in `usable` and carry +inf."""

    grid: RdpOrderGrid
    rdp_eps: np.ndarray
    usable: np.ndarray
    rounds: int = 0

    def __post_init__(self) -> None:
        if self.rdp_eps.shape != (len(self.grid),) or self.usable.shape != (len(self.grid),):
            raise ValueError("Ledger arrays must be aligned with the order grid.")

        if np.any(self.rdp_eps[self.usable] < 0.0):
            raise ValueError("Accumulated RDP values must be nonnegative.")

    @classmethod
    def empty(cls, grid: RdpOrderGrid | None = None) -> "PrivacyLedger":
        grid = grid or RdpOrderGrid()
        return cls(
            grid=grid,
            rdp_eps=_frozen(np.zeros(len(grid), dtype=np.float64)),
            usable=_frozen(np.ones(len(grid), dtype=bool)),
        )


class DpGuarantee(BaseModel):
    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(ge=0.0)
    delta: float = Field(gt=0.0, lt=1.0)
    best_order: int


def accumulate(ledger: PrivacyLedger, cost: RoundCost) -> PrivacyLedger:
    values, usable = sgm_rdp_grid(cost, ledger.grid)
    still_usable = ledger.usable & usable
    lost = ledger.usable & ~usable
    if lost.any():
        lost_orders = [order for order, flag in zip(ledger.grid.orders, lost) if flag]
        logger.warning(f"RDP orders {lost_orders} overflow for q={cost.q}, sigma={cost.sigma}; marked unusable.")

    rdp_eps = np.where(still_usable, ledger.rdp_eps + np.where(usable, values, 0.0), np.inf)
    return PrivacyLedger(
        grid=ledger.grid,
        rdp_eps=_frozen(rdp_eps),
        usable=_frozen(still_usable),
        rounds=ledger.rounds + 1,
    )


def to_dp(ledger: PrivacyLedger, delta: float = DEFAULT_DELTA) -> DpGuarantee:
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta={delta} must lie in (0, 1).")

    if not ledger.usable.any():
        raise NoUsableOrderError("Every order of the ledger overflowed; no DP conversion is possible.")

    orders = ledger.grid.as_array()
    candidates = np.where(ledger.usable, ledger.rdp_eps + math.log(1.0 / delta) / (orders - 1.0), np.inf)
    # argmin returns the first minimum, i.e. the smallest attaining order
    best = int(np.argmin(candidates))
    return DpGuarantee(epsilon=float(candidates[best]), delta=delta, best_order=ledger.grid.orders[best])


def replay(costs: Iterable[RoundCost], grid: RdpOrderGrid | None = None) -> PrivacyLedger:
    ledger = PrivacyLedger.empty(grid)
    for cost in costs:
        ledger = accumulate(ledger, cost)

    return ledger


def epsilon_after(
    cost: RoundCost, rounds: int, delta: float = DEFAULT_DELTA, grid: RdpOrderGrid | None = None
) -> DpGuarantee:
    if rounds < 0:
        raise ValueError(f"rounds={rounds} must be nonnegative.")

    grid = grid or RdpOrderGrid()
    values, usable = sgm_rdp_grid(cost, grid)
    ledger = PrivacyLedger(
        grid=grid,
        rdp_eps=_frozen(np.where(usable, rounds * np.where(usable, values, 0.0), np.inf)),
        usable=_frozen(usable.copy()),
        rounds=rounds,
    )
    return to_dp(ledger, delta)


def rounds_until_budget(cost: RoundCost, delta: float, budget: float, grid: RdpOrderGrid | None = None) -> int:
    if cost.q == 0.0:
        raise InvalidCostError("A zero sampling ratio never consumes budget; the round count is unbounded.")

    grid = grid or RdpOrderGrid()
    if budget <= 0.0:
        return 0

    values, usable = sgm_rdp_grid(cost, grid)
    if not usable.any():
        raise NoUsableOrderError("Every order overflows for this cost.")

    orders = grid.as_array()[usable]
    per_round = values[usable]
    conversion = math.log(1.0 / delta) / (orders - 1.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        headroom = np.where(conversion <= budget, (budget - conversion) / per_round, -1.0)

    if not np.isfinite(headroom).all():
        raise InvalidCostError(f"The per-round cost of q={cost.q}, sigma={cost.sigma} underflows to zero.")

    candidate = max(int(np.floor(headroom.max())), 0)

    def fits(rounds: int) -> bool:
        return bool(np.min(rounds * per_round + conversion) <= budget)

    # floor() of the ratio can be off by one against the composed value
    while candidate > 0 and not fits(candidate):
        candidate -= 1

    while fits(candidate + 1):
        candidate += 1

    return candidate if fits(candidate) else 0
