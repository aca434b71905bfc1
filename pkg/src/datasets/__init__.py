from .dataset import Dataset, split_holdout, train_test_split
from .idx import IMAGES_MAGIC, LABELS_MAGIC, load_idx, write_idx
from .partition import Partition, noniid_partition
from .synth import synth
