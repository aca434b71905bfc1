from .ledger import (
    DEFAULT_DELTA,
    DpGuarantee,
    PrivacyLedger,
    accumulate,
    epsilon_after,
    replay,
    rounds_until_budget,
    to_dp,
)
from .rdp import RdpOrderGrid, RoundCost, sgm_rdp, sgm_rdp_grid

__all__ = [
    "DEFAULT_DELTA",
    "DpGuarantee",
    "PrivacyLedger",
    "RdpOrderGrid",
    "RoundCost",
    "accumulate",
    "epsilon_after",
    "replay",
    "rounds_until_budget",
    "sgm_rdp",
    "sgm_rdp_grid",
    "to_dp",
]
