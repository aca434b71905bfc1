import math

from datetime import UTC, datetime
from importlib import metadata
from pathlib import Path
from pydantic import BaseModel, ConfigDict
from typing import Any, Iterator, Sequence

from .. import __version__
from ..accountant.ledger import DpGuarantee, to_dp
from ..federation.client import ClientState
from ..federation.server import RoundRecord
from ..utils.fileio import CsvWriter, write_csv, write_text_atomic

METRICS_FILE = "metrics.csv"
LEDGER_FILE = "ledger.csv"
LEDGER_SUMMARY_FILE = "ledger_summary.csv"
PARTITION_FILE = "partition.csv"
MANIFEST_FILE = "manifest.json"

METRICS_HEADER = (
    "round",
    "client_id",
    "eps_dp",
    "best_order",
    "sigma",
    "clip_threshold",
    "realized_lot",
    "train_loss",
    "grad_norm",
    "val_loss",
    "test_loss",
    "test_acc",
)
LEDGER_HEADER = ("round", "client_id", "q", "sigma", "eps_dp", "best_order", "delta")
LEDGER_SUMMARY_HEADER = ("client_id", "status", "rounds", "eps_dp", "best_order", "delta")

VERSIONED_PACKAGES = ("numpy", "scipy", "pydantic", "loguru")


class ClientGuarantee(BaseModel):
    model_config = ConfigDict(frozen=True)

    client_id: int
    status: str
    rounds: int
    guarantee: DpGuarantee


class RunManifest(BaseModel):
    config: dict[str, Any]
    versions: dict[str, str]
    started_at: datetime
    finished_at: datetime
    wall_clock_seconds: float
    rounds_completed: int
    clients: list[ClientGuarantee]


def metrics_rows(record: RoundRecord) -> Iterator[tuple[Any, ...]]:
    for report in record.clients:
        yield (
            record.round,
            report.client_id,
            report.eps_dp,
            report.best_order,
            report.sigma,
            report.clip_threshold,
            report.realized_lot,
            report.train_loss,
            report.grad_norm,
            record.val_loss,
            record.test_loss,
            record.test_acc,
        )


def ledger_rows(record: RoundRecord, delta: float) -> Iterator[tuple[Any, ...]]:
    for report in record.clients:
        yield record.round, report.client_id, report.q, report.sigma, report.eps_dp, report.best_order, delta


class RecordSink:
    def __init__(self, output_dir: Path, delta: float) -> None:
        self._metrics = CsvWriter(output_dir / METRICS_FILE, METRICS_HEADER)
        self._ledger = CsvWriter(output_dir / LEDGER_FILE, LEDGER_HEADER)
        self._delta = delta

    def __enter__(self) -> "RecordSink":
        self._metrics.__enter__()
        self._ledger.__enter__()
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self._ledger.__exit__(*exc_info)
        self._metrics.__exit__(*exc_info)

    def __call__(self, record: RoundRecord) -> None:
        self._metrics.write_rows(metrics_rows(record))
        self._ledger.write_rows(ledger_rows(record, self._delta))


def final_guarantee(client: ClientState, delta: float) -> DpGuarantee:
    # rounds run in non-private testing mode have no finite guarantee
    if client.rounds_completed > client.ledger.rounds:
        return DpGuarantee(epsilon=math.inf, delta=delta, best_order=0)

    return to_dp(client.ledger, delta)


def client_guarantees(clients: Sequence[ClientState], delta: float) -> list[ClientGuarantee]:
    return [
        ClientGuarantee(
            client_id=client.client_id,
            status=client.status.value,
            rounds=client.rounds_completed,
            guarantee=final_guarantee(client, delta),
        )
        for client in clients
    ]


def write_ledger_summary(path: Path, guarantees: Sequence[ClientGuarantee]) -> None:
    rows = []
    for item in guarantees:
        dp = item.guarantee
        rows.append((item.client_id, item.status, item.rounds, dp.epsilon, dp.best_order, dp.delta))

    write_csv(path, LEDGER_SUMMARY_HEADER, rows)


def package_versions() -> dict[str, str]:
    versions = {"adap-dpfl": __version__}
    for package in VERSIONED_PACKAGES:
        try:
            versions[package] = metadata.version(package)

        except metadata.PackageNotFoundError:
            versions[package] = "unknown"

    return versions


def write_manifest(
    path: Path,
    config: dict[str, Any],
    started_at: datetime,
    rounds_completed: int,
    guarantees: list[ClientGuarantee],
) -> RunManifest:
    finished_at = datetime.now(tz=UTC)
    manifest = RunManifest(
        config=config,
        versions=package_versions(),
        started_at=started_at,
        finished_at=finished_at,
        wall_clock_seconds=(finished_at - started_at).total_seconds(),
        rounds_completed=rounds_completed,
        clients=guarantees,
    )
    write_text_atomic(path, manifest.model_dump_json(indent=2))
    return manifest
