from pathlib import Path
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Self

from ..accountant.ledger import DEFAULT_DELTA
from ..accountant.rdp import MAX_DEFAULT_ORDER, MIN_ORDER, RdpOrderGrid
from ..dpcore.threshold import DEFAULT_FLOOR, ClipConfig
from ..smallmodel.models import DEFAULT_HIDDEN_WIDTH
from ..smallmodel.optimizers import ADAM_BETAS, ADAM_EPSILON
from ..utils.enums import ClipMode, DatasetSource, ModelKind, NoiseMode, OptimizerKind


class DatasetConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    source: DatasetSource = DatasetSource.SYNTH
    train_images: Path | None = None
    train_labels: Path | None = None
    test_images: Path | None = None
    test_labels: Path | None = None

    classes: int = Field(2, ge=2)
    dim: int = Field(20, ge=1)
    per_class: int = Field(500, ge=0)
    separation: float = Field(6.0, ge=0.0)
    test_fraction: float = Field(0.2, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def check_single_source(self) -> Self:
        paths = (self.train_images, self.train_labels, self.test_images, self.test_labels)
        if self.source is DatasetSource.SYNTH and any(path is not None for path in paths):
            raise ValueError("IDX paths cannot be combined with the synth source.")

        if self.source is not DatasetSource.SYNTH and any(path is None for path in paths):
            raise ValueError(f"The {self.source.value} source needs all four IDX paths.")

        return self


class PartitionConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    clients: int = Field(10, ge=1)
    shards: int = Field(400, ge=1)
    shards_per_client: int = Field(40, ge=1)
    lot_size: int = Field(78, ge=1)
    validation_size: int | None = Field(None, ge=0)

    @model_validator(mode="after")
    def check_shard_arithmetic(self) -> Self:
        if self.clients * self.shards_per_client != self.shards:
            raise ValueError(f"clients x shards_per_client must equal shards ({self.shards}).")

        return self


class ModelConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ModelKind = ModelKind.MLP
    hidden: int = Field(DEFAULT_HIDDEN_WIDTH, ge=1)


class OptimizerConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: OptimizerKind = OptimizerKind.ADAM
    learning_rate: float = Field(0.002, gt=0.0)
    beta1: float = Field(ADAM_BETAS[0], ge=0.0, lt=1.0)
    beta2: float = Field(ADAM_BETAS[1], ge=0.0, lt=1.0)
    epsilon_hat: float = Field(ADAM_EPSILON, gt=0.0)


class ClippingConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: ClipMode = ClipMode.ADAPTIVE
    clip_factor: float = Field(1.0, gt=0.0)
    threshold: float = Field(1.0, gt=0.0)
    floor: float = Field(DEFAULT_FLOOR, gt=0.0)

    def clip_config(self) -> ClipConfig:
        return ClipConfig(clip_factor=self.clip_factor, floor=self.floor)


class NoiseConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: NoiseMode = NoiseMode.ADAPTIVE
    sigma0: float = Field(6.0, ge=0.0)
    beta: float = Field(0.9999, gt=0.0, lt=1.0)
    sigma: float = Field(1.1, ge=0.0)

    @property
    def initial_sigma(self) -> float:
        return self.sigma0 if self.mode is NoiseMode.ADAPTIVE else self.sigma


class PrivacyConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    epsilon: float = Field(2.0, gt=0.0)
    delta: float = Field(DEFAULT_DELTA, gt=0.0, lt=1.0)
    orders: tuple[int, ...] = tuple(range(MIN_ORDER, MAX_DEFAULT_ORDER + 1))

    @field_validator("orders", mode="after")
    @classmethod
    def check_orders(cls, orders: tuple[int, ...]) -> tuple[int, ...]:
        RdpOrderGrid(orders)
        return orders

    def grid(self) -> RdpOrderGrid:
        return RdpOrderGrid(self.orders)


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    rounds: int = Field(100, ge=0)
    seed: int = Field(0, ge=0)
    output_dir: Path | None = None
    workers: int = Field(1, ge=1)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    dataset: DatasetConfig = DatasetConfig()
    partition: PartitionConfig = PartitionConfig()
    model: ModelConfig = ModelConfig()
    optimizer: OptimizerConfig = OptimizerConfig()
    clipping: ClippingConfig = ClippingConfig()
    noise: NoiseConfig = NoiseConfig()
    privacy: PrivacyConfig = PrivacyConfig()
    run: RunConfig = RunConfig()
