from enum import Enum


class RequestStatus(Enum):
    SUCCESS = "SUCCESS"
    FAILURE = "FAILURE"


class ClientStatus(Enum):
    ACTIVE = "ACTIVE"
    EXHAUSTED = "EXHAUSTED"


class DatasetSource(Enum):
    MNIST = "mnist"
    FASHIONMNIST = "fashionmnist"
    SYNTH = "synth"


class ModelKind(Enum):
    LOGISTIC = "logistic"
    MLP = "mlp"


class OptimizerKind(Enum):
    SGD = "sgd"
    ADAM = "adam"


class ClipMode(Enum):
    ADAPTIVE = "adaptive"
    CONSTANT = "constant"


class NoiseMode(Enum):
    ADAPTIVE = "adaptive"
    CONSTANT = "constant"


class Scenario(Enum):
    ADAPTIVE = "adaptive"
    ADAPTIVE_CLIP = "adaptive-clip"
    ADAPTIVE_NOISE = "adaptive-noise"
    CONSTANT = "constant"
