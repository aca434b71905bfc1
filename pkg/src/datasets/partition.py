import numpy as np

from dataclasses import dataclass
from pathlib import Path

from .dataset import Dataset
from ..utils.errors import PartitionError
from ..utils.fileio import write_csv

PARTITION_HEADER = ("client_id", "index")


@dataclass(frozen=True)
class Partition:
    client_indices: tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return len(self.client_indices)

    def sizes(self) -> list[int]:
        return [int(indices.size) for indices in self.client_indices]

    def shards(self, dataset: Dataset) -> list[Dataset]:
        return [dataset.subset(indices) for indices in self.client_indices]

    def to_csv(self, path: Path) -> None:
        rows = ((client_id, int(ix)) for client_id, indices in enumerate(self.client_indices) for ix in indices)
        write_csv(path, PARTITION_HEADER, rows)


def noniid_partition(
    dataset: Dataset, clients: int, shards: int, shards_per_client: int, rng: np.random.Generator
) -> Partition:
    if clients < 1 or shards < 1 or shards_per_client < 1:
        raise PartitionError("clients, shards and shards_per_client must all be positive.")

    if clients * shards_per_client != shards:
        raise PartitionError(f"{clients} clients x {shards_per_client} shards each != {shards} shards.")

    if len(dataset) % shards != 0:
        raise PartitionError(f"{len(dataset)} examples cannot be cut into {shards} equal shards.")

    # stable: ties keep the original index order
    order = np.argsort(dataset.labels, kind="stable")
    shard_slices = order.reshape(shards, len(dataset) // shards)

    assignment = rng.permutation(shards).reshape(clients, shards_per_client)
    return Partition(tuple(np.sort(shard_slices[row].ravel()) for row in assignment))
