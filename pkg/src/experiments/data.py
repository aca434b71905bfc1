import numpy as np

from loguru import logger

from ..configs.models import ExperimentConfig
from ..datasets.dataset import Dataset, split_holdout, train_test_split
from ..datasets.idx import MNIST_CLASSES, load_idx
from ..datasets.partition import Partition, noniid_partition
from ..datasets.synth import synth
from ..federation.builder import FederatedData, SeedStreams
from ..utils.enums import DatasetSource


def load_train_test(cfg: ExperimentConfig, rng: np.random.Generator) -> tuple[Dataset, Dataset]:
    dataset_cfg = cfg.dataset
    if dataset_cfg.source is DatasetSource.SYNTH:
        full = synth(dataset_cfg.classes, dataset_cfg.dim, dataset_cfg.per_class, dataset_cfg.separation, rng)
        return train_test_split(full, dataset_cfg.test_fraction, rng)

    assert dataset_cfg.train_images and dataset_cfg.train_labels and dataset_cfg.test_images and dataset_cfg.test_labels
    source = dataset_cfg.source.value
    train = load_idx(dataset_cfg.train_images, dataset_cfg.train_labels, MNIST_CLASSES, source)
    test = load_idx(dataset_cfg.test_images, dataset_cfg.test_labels, MNIST_CLASSES, source)
    return train, test


def prepare_data(cfg: ExperimentConfig) -> tuple[FederatedData, Partition]:
    synth_seed, holdout_seed, partition_seed = SeedStreams.from_seed(cfg.run.seed).data.spawn(3)
    train, held_out = load_train_test(cfg, np.random.default_rng(synth_seed))

    validation_size = cfg.partition.validation_size
    if validation_size is None:
        validation_size = len(held_out) // 2

    validation, test = split_holdout(held_out, validation_size, np.random.default_rng(holdout_seed))
    partition = noniid_partition(
        train,
        cfg.partition.clients,
        cfg.partition.shards,
        cfg.partition.shards_per_client,
        np.random.default_rng(partition_seed),
    )
    logger.info(
        f"Data: {len(train)} training examples over {len(partition)} clients {partition.sizes()}, "
        f"{len(validation)} validation, {len(test)} test"
    )
    return FederatedData(shards=tuple(partition.shards(train)), validation=validation, test=test), partition
