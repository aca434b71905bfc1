import math
import numpy as np
import pytest

from collections import defaultdict
from pathlib import Path
from typing import Any, Callable

from src.accountant import RdpOrderGrid, RoundCost, replay, to_dp
from src.configs.config import read_experiment_config
from src.configs.models import ExperimentConfig
from src.datasets import Dataset
from src.dpcore import ClipConfig
from src.experiments.data import prepare_data
from src.federation import (
    ClientState,
    FederatedData,
    FederationResult,
    LocalTraining,
    PrivacyBudget,
    RoundRecord,
    Upload,
    aggregate,
    build_federation,
    client_round,
    init_client,
    run,
    sample_lot,
    sampling_ratio,
)
from src.smallmodel import LogisticRegression, ParamVector, build_model, evaluate, init_optimizer
from src.utils.enums import ClientStatus, OptimizerKind
from src.utils.errors import NoUploadsError

SHAPES = (("w", (2,)),)


def upload(client_id: int, values: list[float]) -> Upload:
    return Upload(client_id, ParamVector(np.asarray(values, dtype=np.float64), SHAPES))


def shard(size: int) -> Dataset:
    return Dataset(np.arange(size, dtype=np.float64).reshape(size, 1), np.arange(size) % 2, 2)


def lone_client(size: int, lot_size: int = 78, seed: int = 0) -> tuple[ClientState, LocalTraining]:
    model = LogisticRegression(1, 2)
    training = LocalTraining(
        model=model, lot_size=lot_size, adaptive_clipping=False, clip_config=ClipConfig(), grid=RdpOrderGrid()
    )
    params = model.init_params(np.random.default_rng(seed))
    optimizer = init_optimizer(OptimizerKind.SGD, 0.1, len(params))
    client = init_client(0, shard(size), params, optimizer, training, np.random.SeedSequence(seed), 1.0)
    return client, training


def test_aggregate_equal_weights_is_mean() -> None:
    result = aggregate([upload(1, [2.0, 2.0]), upload(0, [0.0, 0.0])], {0: 0.5, 1: 0.5})
    np.testing.assert_allclose(result.values, [1.0, 1.0])


def test_aggregate_uses_data_weights() -> None:
    v1, v2 = [1.0, -3.0], [5.0, 7.0]
    result = aggregate([upload(0, v1), upload(1, v2)], {0: 0.75, 1: 0.25})
    np.testing.assert_allclose(result.values, 0.75 * np.array(v1) + 0.25 * np.array(v2))


def test_aggregate_renormalizes_over_survivors() -> None:
    result = aggregate([upload(1, [3.0, -1.0])], {0: 0.6, 1: 0.4})
    np.testing.assert_allclose(result.values, [3.0, -1.0])


def test_aggregate_is_order_independent() -> None:
    uploads = [upload(ix, [float(ix), 1.0 / (ix + 1)]) for ix in range(5)]
    weights = {ix: 0.2 for ix in range(5)}
    forward = aggregate(uploads, weights)
    backward = aggregate(list(reversed(uploads)), weights)
    np.testing.assert_array_equal(forward.values, backward.values)


def test_aggregate_without_uploads() -> None:
    with pytest.raises(NoUploadsError):
        aggregate([], {0: 1.0})


def test_aggregate_accepts_only_parameter_vectors() -> None:
    with pytest.raises(TypeError):
        aggregate([Upload(0, np.zeros(2))], {0: 1.0})  # type: ignore[arg-type]


def test_sampling_ratio() -> None:
    assert sampling_ratio(6000, 78) == 78 / 6000
    assert sampling_ratio(50, 78) == 1.0
    assert sampling_ratio(0, 78) == 1.0


def test_full_sampling_returns_shard_in_order() -> None:
    client, _ = lone_client(20)
    lot = sample_lot(client, 1.0)
    np.testing.assert_array_equal(lot.features, client.shard.features)


def test_poisson_lot_size() -> None:
    client, _ = lone_client(6000)
    sizes = [len(sample_lot(client, 78 / 6000)) for _ in range(10_000)]
    assert np.mean(sizes) == pytest.approx(78.0, rel=0.02)


def test_empty_shard_gives_empty_lot() -> None:
    client, _ = lone_client(0)
    assert len(sample_lot(client, 0.5)) == 0


def test_sample_lot_rejects_q() -> None:
    client, _ = lone_client(10)
    with pytest.raises(ValueError):
        sample_lot(client, 0.0)


def test_client_round_updates_ledger_and_reports() -> None:
    client, training = lone_client(200, lot_size=20)
    result = client_round(client, client.params, 1.5, PrivacyBudget(epsilon=10.0, delta=1e-5), training)

    assert result.upload is not None and result.report is not None
    assert result.client.ledger.rounds == 1
    assert result.client.rounds_completed == 1
    assert result.report.eps_dp == to_dp(replay([RoundCost(q=0.1, sigma=1.5)]), 1e-5).epsilon
    assert result.report.clip_threshold == 1.0
    assert result.client.clip_state.previous_sigma == 1.5
    assert result.client.previous_norms is not None


def test_budget_gate_discards_the_crossing_round() -> None:
    client, training = lone_client(200, lot_size=20)
    result = client_round(client, client.params, 1.0, PrivacyBudget(epsilon=0.5, delta=1e-5), training)

    assert result.upload is None and result.report is None
    assert result.client.status is ClientStatus.EXHAUSTED
    assert result.client.ledger.rounds == 0
    with pytest.raises(ValueError):
        client_round(result.client, client.params, 1.0, PrivacyBudget(epsilon=0.5, delta=1e-5), training)


def test_empty_lot_still_pays_for_the_round() -> None:
    client, training = lone_client(0)
    result = client_round(client, client.params, 2.0, PrivacyBudget(epsilon=10.0, delta=1e-5), training)
    assert result.report is not None
    assert result.report.realized_lot == 0
    assert result.client.ledger.rounds == 1


def test_non_private_mode_skips_accounting() -> None:
    client, training = lone_client(100, lot_size=10)
    result = client_round(client, client.params, 0.0, PrivacyBudget(epsilon=0.01, delta=1e-5), training)
    assert result.report is not None
    assert math.isinf(result.report.eps_dp)
    assert result.report.best_order == 0
    assert result.client.ledger.rounds == 0


def test_one_client_without_noise_is_centralized_gradient_descent(make_config: Callable[..., ExperimentConfig]) -> None:
    cfg = make_config(
        partition__clients=1,
        partition__shards=1,
        partition__shards_per_client=1,
        partition__lot_size=80,
        optimizer__kind="sgd",
        optimizer__learning_rate=0.5,
        clipping__mode="constant",
        clipping__threshold=1e12,
        noise__mode="constant",
        noise__sigma=0.0,
        run__rounds=20,
    )
    data, _ = prepare_data(cfg)
    result = run(cfg, data)
    assert len(result.records) == 20

    model = build_model(cfg.model.kind, data.dim, data.num_classes, cfg.model.hidden)
    params = build_federation(cfg, data).server.params
    train = data.shards[0]
    for record in result.records:
        gradients, _ = model.per_sample_gradients(params, train)
        params = params.with_values(params.values - 0.5 * (gradients.total() / len(train)))
        val_loss, _ = evaluate(model, params, data.validation)
        assert record.val_loss == pytest.approx(val_loss, rel=0.0, abs=1e-10)


def records_json(result: FederationResult) -> list[str]:
    return [record.model_dump_json() for record in result.records]


def test_runs_are_deterministic(make_config: Callable[..., ExperimentConfig]) -> None:
    cfg = make_config(run__rounds=8)
    data, _ = prepare_data(cfg)
    assert records_json(run(cfg, data)) == records_json(run(cfg, prepare_data(cfg)[0]))


def test_parallel_clients_match_sequential(make_config: Callable[..., ExperimentConfig]) -> None:
    data, _ = prepare_data(make_config())
    sequential = run(make_config(run__rounds=6), data)
    parallel = run(make_config(run__rounds=6, run__workers=3), data)
    assert records_json(sequential) == records_json(parallel)


def test_zero_rounds(make_config: Callable[..., ExperimentConfig]) -> None:
    cfg = make_config(run__rounds=0)
    data, _ = prepare_data(cfg)
    result = run(cfg, data)
    assert result.records == ()
    np.testing.assert_array_equal(result.server.params.values, build_federation(cfg, data).server.params.values)


def check_ledger_consistency(records: tuple[RoundRecord, ...], budget: float, delta: float) -> None:
    costs: dict[int, list[RoundCost]] = defaultdict(list)
    previous_sigma = math.inf
    for record in records:
        sigmas = {report.sigma for report in record.clients}
        assert len(sigmas) <= 1
        for report in record.clients:
            costs[report.client_id].append(RoundCost(q=report.q, sigma=report.sigma))
            assert report.sigma <= previous_sigma
            assert report.eps_dp <= budget
            assert to_dp(replay(costs[report.client_id]), delta).epsilon == pytest.approx(report.eps_dp, abs=1e-12)
            previous_sigma = report.sigma


def test_budget_exhaustion_stops_the_run(make_config: Callable[..., ExperimentConfig]) -> None:
    cfg = make_config(privacy__epsilon=3.0, run__rounds=200)
    data, _ = prepare_data(cfg)
    result = run(cfg, data)

    assert 0 < len(result.records) < 200
    assert all(client.status is ClientStatus.EXHAUSTED for client in result.clients)
    for client in result.clients:
        assert client.ledger.rounds == client.rounds_completed

    check_ledger_consistency(result.records, 3.0, 1e-5)


def test_weights_follow_shard_sizes(make_config: Callable[..., ExperimentConfig]) -> None:
    data, _ = prepare_data(make_config())
    server = build_federation(make_config(), data).server
    assert math.fsum(server.weights.values()) == pytest.approx(1.0, abs=1e-12)
    assert server.weights == {0: 0.5, 1: 0.5}


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_desk_scale_run_reaches_accuracy(seed: int, tmp_path: Path) -> None:
    cfg = read_experiment_config(preset="synth", overrides={"run.seed": seed, "run.output_dir": str(tmp_path)})
    data, _ = prepare_data(cfg)
    result = run(cfg, data)

    assert result.records
    assert result.records[-1].test_acc >= 0.9
    check_ledger_consistency(result.records, cfg.privacy.epsilon, cfg.privacy.delta)

    per_client: dict[int, list[float]] = defaultdict(list)
    for record in result.records:
        for report in record.clients:
            per_client[report.client_id].append(report.eps_dp)

    for history in per_client.values():
        assert history == sorted(history)


def logistic_rows(values: np.ndarray, features: np.ndarray, labels: np.ndarray, classes: int) -> np.ndarray:
    dim = features.shape[1]
    weights, bias = values[: classes * dim].reshape(classes, dim), values[classes * dim :]
    logits = features @ weights.T + bias
    probs = np.exp(logits - logits.max(axis=1, keepdims=True))
    probs /= probs.sum(axis=1, keepdims=True)
    probs[np.arange(labels.size), labels] -= 1.0
    return np.concatenate([(probs[:, :, None] * features[:, None, :]).reshape(labels.size, -1), probs], axis=1)


def logistic_loss(values: np.ndarray, dataset: Dataset) -> float:
    classes, dim = dataset.num_classes, dataset.dim
    logits = dataset.features @ values[: classes * dim].reshape(classes, dim).T + values[classes * dim :]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return float(-log_probs[np.arange(len(dataset)), dataset.labels].mean())


def replay_adaptive_logistic(cfg: ExperimentConfig, data: FederatedData, rounds: int) -> list[dict[str, Any]]:
    """Straight-line rerun of the adaptive federation on its own generators, one dict per round."""

    classes, dim, lot = data.num_classes, data.dim, cfg.partition.lot_size
    beta1, beta2, lr = cfg.optimizer.beta1, cfg.optimizer.beta2, cfg.optimizer.learning_rate
    size = classes * (dim + 1)
    total = sum(len(shard) for shard in data.shards)
    global_values = np.zeros(size)

    _, _, clients_seed = np.random.SeedSequence(cfg.run.seed).spawn(3)
    clients = []
    for shard, seed in zip(data.shards, clients_seed.spawn(len(data.shards))):
        sampling_seed, noise_seed = seed.spawn(2)
        noise = np.random.default_rng(noise_seed)
        features = noise.standard_normal((lot, dim))
        labels = noise.integers(0, classes, lot)
        norms = np.linalg.norm(logistic_rows(global_values, features, labels, classes), axis=1)
        clients.append(
            {
                "shard": shard,
                "q": min(1.0, lot / len(shard)),
                "sampling": np.random.default_rng(sampling_seed),
                "noise": noise,
                "threshold": max(cfg.clipping.clip_factor * norms.mean(), cfg.clipping.floor),
                "previous_norms": None,
                "previous_sigma": 0.0,
                "first": np.zeros(size),
                "second": np.zeros(size),
            }
        )

    sigma = cfg.noise.sigma0
    trace = []
    for step in range(1, rounds + 1):
        uploads, thresholds, lots = [], [], []
        for client in clients:
            shard = client["shard"]
            picked = np.flatnonzero(client["sampling"].random(len(shard)) < client["q"])
            rows = logistic_rows(global_values, shard.features[picked], shard.labels[picked], classes)
            norms = np.linalg.norm(rows, axis=1)

            threshold = client["threshold"]
            if client["previous_norms"] is not None:
                clipped_total = np.minimum(client["previous_norms"], threshold).sum()
                threshold_noise = client["noise"].normal(0.0, threshold * client["previous_sigma"])
                noisy_norm = abs((clipped_total + threshold_noise) / lot)
                threshold = max(cfg.clipping.clip_factor * noisy_norm, cfg.clipping.floor)

            clipped = rows / np.maximum(1.0, norms / threshold)[:, None]
            gradient = (clipped.sum(axis=0) + client["noise"].normal(0.0, sigma * threshold, size)) / lot

            client["first"] = beta1 * client["first"] + (1.0 - beta1) * gradient
            client["second"] = beta2 * client["second"] + (1.0 - beta2) * gradient * gradient
            first_hat = client["first"] / (1.0 - beta1**step)
            second_hat = client["second"] / (1.0 - beta2**step)
            uploads.append(global_values - lr * first_hat / (np.sqrt(second_hat) + cfg.optimizer.epsilon_hat))

            client.update(threshold=threshold, previous_norms=norms, previous_sigma=sigma)
            thresholds.append(threshold)
            lots.append(picked.size)

        global_values = sum(len(client["shard"]) / total * values for client, values in zip(clients, uploads))
        trace.append(
            {
                "params": global_values,
                "thresholds": thresholds,
                "lots": lots,
                "q": [client["q"] for client in clients],
                "sigma": sigma,
                "val_loss": logistic_loss(global_values, data.validation),
            }
        )

    return trace


def test_federation_matches_straight_line_replay(make_config: Callable[..., ExperimentConfig]) -> None:
    cfg = make_config(run__rounds=3)
    data = prepare_data(cfg)[0]
    expected = replay_adaptive_logistic(cfg, data, cfg.run.rounds)

    fed = build_federation(cfg, data)
    for t, round_trace in enumerate(expected):
        record = fed.step()
        assert record is not None
        # three finite losses are not enough to decay
        assert fed.server.sigma_state.decay_count == 0

        reports = sorted(record.clients, key=lambda report: report.client_id)
        assert [report.realized_lot for report in reports] == round_trace["lots"]
        for report, threshold, q in zip(reports, round_trace["thresholds"], round_trace["q"]):
            assert report.sigma == round_trace["sigma"]
            assert report.clip_threshold == pytest.approx(threshold, rel=1e-10)
            ledger = replay([RoundCost(q=q, sigma=cfg.noise.sigma0)] * (t + 1), cfg.privacy.grid())
            assert report.eps_dp == pytest.approx(to_dp(ledger, cfg.privacy.delta).epsilon, rel=1e-12)

        np.testing.assert_allclose(fed.server.params.values, round_trace["params"], rtol=1e-10, atol=1e-12)
        assert record.val_loss == pytest.approx(round_trace["val_loss"], rel=1e-10)
