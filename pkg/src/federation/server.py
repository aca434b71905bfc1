import math
import numpy as np

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from loguru import logger
from pydantic import BaseModel, ConfigDict
from typing import Callable, Mapping, Sequence

from .client import ClientReport, ClientRoundResult, ClientState, LocalTraining, PrivacyBudget, Upload, client_round
from ..datasets.dataset import Dataset
from ..scheduler.sigma import SigmaState, current_sigma, observe_loss
from ..smallmodel.models import evaluate
from ..smallmodel.params import ParamVector
from ..utils.errors import NoUploadsError

WEIGHT_TOLERANCE = 1e-12


class RoundRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    round: int
    clients: tuple[ClientReport, ...]
    val_loss: float
    test_loss: float
    test_acc: float


@dataclass(frozen=True)
class ServerState:
    params: ParamVector
    sigma_state: SigmaState
    weights: Mapping[int, float]
    validation: Dataset
    test: Dataset
    budget: PrivacyBudget
    round: int = 0

    def __post_init__(self) -> None:
        if abs(math.fsum(self.weights.values()) - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError("Client weights must sum to one.")


@dataclass(frozen=True)
class FederationResult:
    records: tuple[RoundRecord, ...]
    server: ServerState
    clients: tuple[ClientState, ...] = field(default_factory=tuple)


def client_weights(clients: Sequence[ClientState]) -> dict[int, float]:
    total = sum(len(client.shard) for client in clients)
    if total == 0:
        raise ValueError("Clients hold no data.")

    return {client.client_id: len(client.shard) / total for client in clients}


def aggregate(uploads: Sequence[Upload], weights: Mapping[int, float]) -> ParamVector:
    if not uploads:
        raise NoUploadsError("No client uploaded parameters this round.")

    ordered = sorted(uploads, key=lambda upload: upload.client_id)
    for upload in ordered:
        if not isinstance(upload.params, ParamVector):
            raise TypeError("Clients may only upload parameter vectors.")

        ordered[0].params.check_compatible(upload.params)

    raw = [weights[upload.client_id] for upload in ordered]
    total = math.fsum(raw)
    if total <= 0.0:
        raise NoUploadsError("Uploading clients carry zero total weight.")

    normalized = np.asarray([weight / total for weight in raw])
    stacked = np.stack([upload.params.values for upload in ordered])
    return ordered[0].params.with_values(np.sum(normalized[:, None] * stacked, axis=0))


class Federation:
    def __init__(
        self,
        server: ServerState,
        clients: Sequence[ClientState],
        training: LocalTraining,
        workers: int = 1,
    ) -> None:
        self._server = server
        self._clients = {client.client_id: client for client in clients}
        self._training = training
        self._workers = workers

    @property
    def server(self) -> ServerState:
        return self._server

    @property
    def clients(self) -> tuple[ClientState, ...]:
        return tuple(self._clients[client_id] for client_id in sorted(self._clients))

    def run(self, rounds: int, on_record: Callable[[RoundRecord], None] | None = None) -> FederationResult:
        records: list[RoundRecord] = []
        for _ in range(rounds):
            if (record := self.step()) is None:
                break

            records.append(record)
            if on_record is not None:
                on_record(record)

        return FederationResult(records=tuple(records), server=self._server, clients=self.clients)

    def step(self) -> RoundRecord | None:
        server = self._server
        sigma_t = current_sigma(server.sigma_state)
        active = [client for client in self.clients if client.active]
        if not active:
            logger.warning(f"All clients exhausted their budget before round {server.round}; stopping.")
            return None

        results = self._local_rounds(active, server.params, sigma_t)
        for result in results:
            self._clients[result.client.client_id] = result.client

        uploads = [result.upload for result in results if result.upload is not None]
        if not uploads:
            logger.warning(f"No uploads in round {server.round}; every client exhausted its budget.")
            return None

        params = aggregate(uploads, server.weights)
        val_loss, _ = evaluate(self._training.model, params, server.validation)
        test_loss, test_acc = evaluate(self._training.model, params, server.test)

        record = RoundRecord(
            round=server.round,
            clients=tuple(result.report for result in results if result.report is not None),
            val_loss=val_loss,
            test_loss=test_loss,
            test_acc=test_acc,
        )
        self._server = replace(
            server,
            params=params,
            sigma_state=observe_loss(server.sigma_state, val_loss),
            round=server.round + 1,
        )
        logger.info(
            f"Round {record.round}: sigma={sigma_t:.6g} val_loss={val_loss:.4f} test_acc={test_acc:.4f} "
            f"uploads={len(uploads)}/{len(active)}"
        )
        return record

    def _local_rounds(self, active: list[ClientState], params: ParamVector, sigma_t: float) -> list[ClientRoundResult]:
        def train(client: ClientState) -> ClientRoundResult:
            return client_round(client, params, sigma_t, self._server.budget, self._training)

        if self._workers == 1:
            return [train(client) for client in active]

        with ThreadPoolExecutor(max_workers=self._workers) as pool:
            return list(pool.map(train, active))
