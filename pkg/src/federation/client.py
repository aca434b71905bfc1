import math
import numpy as np

from dataclasses import dataclass, replace
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from ..accountant.ledger import PrivacyLedger, accumulate, to_dp
from ..accountant.rdp import RdpOrderGrid, RoundCost
from ..datasets.dataset import Dataset
from ..dpcore.clipping import clip_batch, noisy_mean
from ..dpcore.sampler import GaussianSampler
from ..dpcore.threshold import ClipConfig, ClipState, init_threshold, next_threshold
from ..smallmodel.models import Model
from ..smallmodel.optimizers import OptimizerState, apply_update
from ..smallmodel.params import ParamVector
from ..utils.enums import ClientStatus


class PrivacyBudget(BaseModel):
    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(gt=0.0)
    delta: float = Field(gt=0.0, lt=1.0)


@dataclass(frozen=True)
class LocalTraining:
    """With adaptive_clipping off, every round clips at the client's initial ClipState threshold."""

    model: Model
    lot_size: int
    adaptive_clipping: bool
    clip_config: ClipConfig
    grid: RdpOrderGrid


@dataclass(frozen=True)
class ClientState:
    client_id: int
    shard: Dataset
    q: float
    params: ParamVector
    optimizer: OptimizerState
    clip_state: ClipState
    ledger: PrivacyLedger
    sampling_rng: np.random.Generator
    noise_rng: GaussianSampler
    status: ClientStatus = ClientStatus.ACTIVE
    rounds_completed: int = 0
    previous_norms: np.ndarray | None = None

    @property
    def active(self) -> bool:
        return self.status is ClientStatus.ACTIVE


class ClientReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    client_id: int
    q: float
    eps_dp: float
    best_order: int
    sigma: float
    clip_threshold: float
    realized_lot: int
    train_loss: float
    grad_norm: float


@dataclass(frozen=True)
class Upload:
    client_id: int
    params: ParamVector


@dataclass(frozen=True)
class ClientRoundResult:
    client: ClientState
    upload: Upload | None = None
    report: ClientReport | None = None


def sampling_ratio(shard_size: int, lot_size: int) -> float:
    return min(1.0, lot_size / shard_size) if shard_size else 1.0


def init_client(
    client_id: int,
    shard: Dataset,
    params: ParamVector,
    optimizer: OptimizerState,
    training: LocalTraining,
    seed: np.random.SeedSequence,
    constant_threshold: float | None = None,
) -> ClientState:
    sampling_seed, noise_seed = seed.spawn(2)
    noise_rng = GaussianSampler(noise_seed)
    if constant_threshold is not None:
        clip_state = ClipState(threshold=constant_threshold)
    else:
        clip_state = init_threshold(training.model, params, training.clip_config, training.lot_size, noise_rng)

    return ClientState(
        client_id=client_id,
        shard=shard,
        q=sampling_ratio(len(shard), training.lot_size),
        params=params,
        optimizer=optimizer,
        clip_state=clip_state,
        ledger=PrivacyLedger.empty(training.grid),
        sampling_rng=np.random.default_rng(sampling_seed),
        noise_rng=noise_rng,
    )


def sample_lot(client: ClientState, q: float) -> Dataset:
    if not 0.0 < q <= 1.0:
        raise ValueError(f"Sampling probability q={q} must lie in (0, 1].")

    mask = client.sampling_rng.random(len(client.shard)) < q
    return client.shard.subset(np.flatnonzero(mask))


def client_round(
    client: ClientState,
    global_w: ParamVector,
    sigma_t: float,
    budget: PrivacyBudget,
    training: LocalTraining,
) -> ClientRoundResult:
    """One local DP round. A sigma_t of 0 is the non-private testing mode: no accounting, no budget gate."""

    if not client.active:
        raise ValueError(f"Client {client.client_id} is exhausted and cannot train.")

    model = training.model
    lot = sample_lot(client, client.q)
    gradients, losses = model.per_sample_gradients(global_w, lot)
    raw_norms = gradients.norms()

    # threshold noise is drawn before gradient noise
    clip_state = client.clip_state
    if training.adaptive_clipping and client.previous_norms is not None:
        clip_state = next_threshold(
            client.previous_norms,
            clip_state,
            training.clip_config,
            clip_state.previous_sigma,
            training.lot_size,
            client.noise_rng,
        )

    threshold = clip_state.threshold
    noisy_gradient = noisy_mean(
        clip_batch(gradients, threshold), threshold, sigma_t, training.lot_size, client.noise_rng
    )
    params, optimizer = apply_update(global_w, client.optimizer, noisy_gradient)

    ledger = client.ledger
    eps_dp, best_order = math.inf, 0
    if sigma_t > 0.0:
        ledger = accumulate(ledger, RoundCost(q=client.q, sigma=sigma_t))
        guarantee = to_dp(ledger, budget.delta)
        if guarantee.epsilon > budget.epsilon:
            logger.warning(
                f"Client {client.client_id} would reach epsilon={guarantee.epsilon:.4f} > {budget.epsilon} "
                f"after {client.rounds_completed} rounds; it stops uploading."
            )
            return ClientRoundResult(client=replace(client, status=ClientStatus.EXHAUSTED))

        eps_dp, best_order = guarantee.epsilon, guarantee.best_order

    updated = replace(
        client,
        params=params,
        optimizer=optimizer,
        clip_state=replace(clip_state, previous_sigma=sigma_t),
        ledger=ledger,
        rounds_completed=client.rounds_completed + 1,
        previous_norms=raw_norms,
    )
    report = ClientReport(
        client_id=client.client_id,
        q=client.q,
        eps_dp=eps_dp,
        best_order=best_order,
        sigma=sigma_t,
        clip_threshold=threshold,
        realized_lot=len(lot),
        train_loss=float(losses.mean()) if losses.size else math.nan,
        grad_norm=float(raw_norms.mean()) if raw_norms.size else math.nan,
    )
    logger.debug(
        f"Client {client.client_id}: lot={len(lot)} C={threshold:.6g} sigma={sigma_t:.6g} eps={eps_dp:.4f}"
    )
    return ClientRoundResult(client=updated, upload=Upload(client.client_id, params), report=report)
