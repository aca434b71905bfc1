from .builder import FederatedData, SeedStreams, build_federation, initial_sigma_state, run
from .client import (
    ClientReport,
    ClientRoundResult,
    ClientState,
    LocalTraining,
    PrivacyBudget,
    Upload,
    client_round,
    init_client,
    sample_lot,
    sampling_ratio,
)
from .server import Federation, FederationResult, RoundRecord, ServerState, aggregate, client_weights
