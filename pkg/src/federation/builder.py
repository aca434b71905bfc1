import numpy as np

from dataclasses import dataclass
from loguru import logger
from typing import Callable

from .client import LocalTraining, PrivacyBudget, init_client
from .server import Federation, FederationResult, RoundRecord, ServerState, client_weights
from ..configs.models import ExperimentConfig
from ..datasets.dataset import Dataset
from ..scheduler.sigma import SigmaState
from ..smallmodel.models import build_model
from ..smallmodel.optimizers import init_optimizer
from ..utils.enums import ClipMode, NoiseMode


@dataclass(frozen=True)
class FederatedData:
    shards: tuple[Dataset, ...]
    validation: Dataset
    test: Dataset

    @property
    def num_classes(self) -> int:
        return self.validation.num_classes

    @property
    def dim(self) -> int:
        return self.validation.dim


@dataclass(frozen=True)
class SeedStreams:
    data: np.random.SeedSequence
    model: np.random.SeedSequence
    clients: np.random.SeedSequence

    @classmethod
    def from_seed(cls, seed: int) -> "SeedStreams":
        data, model, clients = np.random.SeedSequence(seed).spawn(3)
        return cls(data=data, model=model, clients=clients)


def initial_sigma_state(cfg: ExperimentConfig) -> SigmaState:
    if cfg.noise.mode is NoiseMode.ADAPTIVE:
        return SigmaState.initial(cfg.noise.sigma0, cfg.noise.beta)

    return SigmaState.constant(cfg.noise.sigma)


def build_federation(cfg: ExperimentConfig, data: FederatedData) -> Federation:
    streams = SeedStreams.from_seed(cfg.run.seed)
    model = build_model(cfg.model.kind, data.dim, data.num_classes, cfg.model.hidden)
    params = model.init_params(np.random.default_rng(streams.model))

    adaptive_clipping = cfg.clipping.mode is ClipMode.ADAPTIVE
    training = LocalTraining(
        model=model,
        lot_size=cfg.partition.lot_size,
        adaptive_clipping=adaptive_clipping,
        clip_config=cfg.clipping.clip_config(),
        grid=cfg.privacy.grid(),
    )

    clients = []
    for client_id, (shard, seed) in enumerate(zip(data.shards, streams.clients.spawn(len(data.shards)))):
        optimizer = init_optimizer(
            cfg.optimizer.kind,
            cfg.optimizer.learning_rate,
            len(params),
            betas=(cfg.optimizer.beta1, cfg.optimizer.beta2),
            epsilon_hat=cfg.optimizer.epsilon_hat,
        )
        constant_threshold = None if adaptive_clipping else cfg.clipping.threshold
        clients.append(init_client(client_id, shard, params, optimizer, training, seed, constant_threshold))

    server = ServerState(
        params=params,
        sigma_state=initial_sigma_state(cfg),
        weights=client_weights(clients),
        validation=data.validation,
        test=data.test,
        budget=PrivacyBudget(epsilon=cfg.privacy.epsilon, delta=cfg.privacy.delta),
    )
    logger.info(
        f"Federation of {len(clients)} clients: model={cfg.model.kind.value} clip={cfg.clipping.mode.value} "
        f"noise={cfg.noise.mode.value} budget=({cfg.privacy.epsilon}, {cfg.privacy.delta})"
    )
    return Federation(server, clients, training, workers=cfg.run.workers)


def run(
    cfg: ExperimentConfig, data: FederatedData, on_record: Callable[[RoundRecord], None] | None = None
) -> FederationResult:
    return build_federation(cfg, data).run(cfg.run.rounds, on_record)
