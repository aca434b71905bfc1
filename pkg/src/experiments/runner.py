import os

from concurrent.futures import ProcessPoolExecutor
from datetime import UTC, datetime
from loguru import logger
from pathlib import Path
from typing import Any, Sequence

from . import RunResponse, RunSummary
from .artifacts import (
    LEDGER_SUMMARY_FILE,
    MANIFEST_FILE,
    PARTITION_FILE,
    RecordSink,
    client_guarantees,
    write_ledger_summary,
    write_manifest,
)
from .data import prepare_data
from ..configs.config import config_keys, with_overrides
from ..configs.models import ExperimentConfig
from ..federation.builder import run
from ..scheduler.sigma import current_sigma
from ..utils.enums import RequestStatus, Scenario
from ..utils.errors import AdapDpflError, InvalidAxisError
from ..utils.fileio import format_field, write_csv

OUTPUT_ROOT_ENV = "ADAP_DPFL_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = Path("runs")
SUMMARY_FILE = "summary.csv"
SUMMARY_HEADER = ("scenario", "seed", "rounds", "final_sigma", "final_test_loss", "final_test_acc")

SCENARIO_OVERRIDES: dict[Scenario, dict[str, str]] = {
    Scenario.ADAPTIVE: {"clipping.mode": "adaptive", "noise.mode": "adaptive"},
    Scenario.ADAPTIVE_CLIP: {"clipping.mode": "adaptive", "noise.mode": "constant"},
    Scenario.ADAPTIVE_NOISE: {"clipping.mode": "constant", "noise.mode": "adaptive"},
    Scenario.CONSTANT: {"clipping.mode": "constant", "noise.mode": "constant"},
}


def resolve_output_dir(cfg: ExperimentConfig) -> Path:
    if cfg.run.output_dir is not None:
        return cfg.run.output_dir

    root = Path(os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT))
    return root / f"{cfg.dataset.source.value}-seed{cfg.run.seed}"


def run_experiment(cfg: ExperimentConfig) -> RunResponse:
    """Budget exhaustion of every client ends the run early and still counts as success."""

    output_dir = resolve_output_dir(cfg)
    started_at = datetime.now(tz=UTC)
    logger.info(f"Starting run in {output_dir} (seed={cfg.run.seed}, rounds={cfg.run.rounds})")
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        data, partition = prepare_data(cfg)
        partition.to_csv(output_dir / PARTITION_FILE)

        with RecordSink(output_dir, cfg.privacy.delta) as sink:
            result = run(cfg, data, on_record=sink)

        guarantees = client_guarantees(result.clients, cfg.privacy.delta)
        write_ledger_summary(output_dir / LEDGER_SUMMARY_FILE, guarantees)
        write_manifest(
            output_dir / MANIFEST_FILE,
            cfg.model_dump(mode="json"),
            started_at,
            len(result.records),
            guarantees,
        )

    except (AdapDpflError, OSError) as err:
        logger.error(f"Run in {output_dir} failed: {err}")
        return RunResponse(status=RequestStatus.FAILURE, message=str(err))

    last = result.records[-1] if result.records else None
    summary = RunSummary(
        output_dir=str(output_dir),
        rounds=len(result.records),
        final_sigma=current_sigma(result.server.sigma_state),
        final_test_loss=last.test_loss if last is not None else None,
        final_test_acc=last.test_acc if last is not None else None,
    )
    logger.info(f"Finished {summary.rounds} rounds in {output_dir}")
    return RunResponse(status=RequestStatus.SUCCESS, message=f"{summary.rounds} rounds completed", summary=summary)


def resolve_axis(axis: str) -> str:
    keys = [key for key in config_keys() if key != "run.output_dir"]
    if axis in keys:
        return axis

    matches = [key for key in keys if key.rsplit(".", 1)[-1] == axis]
    if len(matches) == 1:
        return matches[0]

    raise InvalidAxisError(axis, keys)


def _run_all(configs: Sequence[ExperimentConfig], jobs: int) -> list[RunResponse]:
    if jobs <= 1 or len(configs) <= 1:
        return [run_experiment(cfg) for cfg in configs]

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_experiment, configs))


def sweep(cfg: ExperimentConfig, axis: str, values: Sequence[Any], jobs: int = 1) -> list[RunResponse]:
    key = resolve_axis(axis)
    if not values:
        logger.info(f"Sweep over {key} has no values; nothing to run.")
        return []

    base_dir = resolve_output_dir(cfg)
    configs = [
        with_overrides(cfg, {key: value, "run.output_dir": str(base_dir / f"{key}={format_field(value)}")})
        for value in values
    ]
    logger.info(f"Sweeping {key} over {list(values)} into {base_dir}")
    return _run_all(configs, jobs)


def compare(cfg: ExperimentConfig, seeds: Sequence[int], jobs: int = 1) -> list[RunResponse]:
    if not seeds:
        logger.info("Comparison has no seeds; nothing to run.")
        return []

    base_dir = resolve_output_dir(cfg)
    cases = [(scenario, seed) for scenario in Scenario for seed in seeds]
    configs = [
        with_overrides(
            cfg,
            {
                **SCENARIO_OVERRIDES[scenario],
                "run.seed": seed,
                "run.output_dir": str(base_dir / scenario.value / f"seed{seed}"),
            },
        )
        for scenario, seed in cases
    ]
    responses = _run_all(configs, jobs)

    rows = []
    for (scenario, seed), response in zip(cases, responses):
        if (summary := response.summary) is None:
            continue

        rows.append(
            (scenario.value, seed, summary.rounds, summary.final_sigma, summary.final_test_loss, summary.final_test_acc)
        )

    write_csv(base_dir / SUMMARY_FILE, SUMMARY_HEADER, rows)
    return responses
