import numpy as np

from abc import ABC, abstractmethod
from scipy.special import logsumexp

from .params import Batch, GradientBatch, LayerShape, ParamVector
from ..utils.enums import ModelKind
from ..utils.errors import DimensionMismatchError, EmptySliceError, NonFiniteError

DEFAULT_HIDDEN_WIDTH = 32


class Model(ABC):
    def __init__(self, input_dim: int, num_classes: int) -> None:
        if input_dim < 1 or num_classes < 2:
            raise ValueError(f"Need input_dim >= 1 and num_classes >= 2, got {input_dim}, {num_classes}.")

        self.input_dim = input_dim
        self.num_classes = num_classes

    @property
    @abstractmethod
    def shapes(self) -> tuple[LayerShape, ...]: ...

    @abstractmethod
    def init_params(self, rng: np.random.Generator) -> ParamVector: ...

    @abstractmethod
    def logits(self, params: ParamVector, features: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _backward(self, params: ParamVector, features: np.ndarray, dlogits: np.ndarray) -> np.ndarray: ...

    def check_batch(self, params: ParamVector, batch: Batch) -> tuple[np.ndarray, np.ndarray]:
        if params.shapes != self.shapes:
            raise DimensionMismatchError(f"Parameters laid out as {params.shapes}, model expects {self.shapes}.")

        features = np.asarray(batch.features, dtype=np.float64)
        labels = np.asarray(batch.labels, dtype=np.int64)
        if features.ndim != 2 or features.shape[1] != self.input_dim:
            raise DimensionMismatchError(f"Features of shape {features.shape}, expected (n, {self.input_dim}).")

        if labels.shape != (features.shape[0],):
            raise DimensionMismatchError(f"{labels.size} labels for {features.shape[0]} examples.")

        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise DimensionMismatchError(f"Labels must lie in [0, {self.num_classes}).")

        return features, labels

    def per_sample_gradients(self, params: ParamVector, batch: Batch) -> tuple[GradientBatch, np.ndarray]:
        features, labels = self.check_batch(params, batch)
        if features.shape[0] == 0:
            return GradientBatch.empty(self.shapes), np.zeros(0)

        logits = self.logits(params, features)
        losses, probs = _softmax_cross_entropy(logits, labels)
        dlogits = probs.copy()
        dlogits[np.arange(labels.size), labels] -= 1.0

        rows = self._backward(params, features, dlogits)
        return GradientBatch(rows, self.shapes), losses

    def mean_loss(self, params: ParamVector, batch: Batch) -> float:
        features, labels = self.check_batch(params, batch)
        losses, _ = _softmax_cross_entropy(self.logits(params, features), labels)
        return float(losses.mean())


class LogisticRegression(Model):
    @property
    def shapes(self) -> tuple[LayerShape, ...]:
        return (("weights", (self.num_classes, self.input_dim)), ("bias", (self.num_classes,)))

    def init_params(self, rng: np.random.Generator) -> ParamVector:
        return ParamVector.zeros(self.shapes)

    def logits(self, params: ParamVector, features: np.ndarray) -> np.ndarray:
        layers = params.layers()
        return features @ layers["weights"].T + layers["bias"]

    def _backward(self, params: ParamVector, features: np.ndarray, dlogits: np.ndarray) -> np.ndarray:
        n = features.shape[0]
        weights = (dlogits[:, :, None] * features[:, None, :]).reshape(n, -1)
        return np.concatenate([weights, dlogits], axis=1)


class Mlp(Model):
    def __init__(self, input_dim: int, num_classes: int, hidden: int = DEFAULT_HIDDEN_WIDTH) -> None:
        super().__init__(input_dim, num_classes)
        if hidden < 1:
            raise ValueError(f"Hidden width must be positive, got {hidden}.")

        self.hidden = hidden

    @property
    def shapes(self) -> tuple[LayerShape, ...]:
        return (
            ("hidden.weights", (self.hidden, self.input_dim)),
            ("hidden.bias", (self.hidden,)),
            ("output.weights", (self.num_classes, self.hidden)),
            ("output.bias", (self.num_classes,)),
        )

    def init_params(self, rng: np.random.Generator) -> ParamVector:
        layers = {
            "hidden.weights": rng.normal(0.0, np.sqrt(2.0 / self.input_dim), (self.hidden, self.input_dim)),
            "hidden.bias": np.zeros(self.hidden),
            "output.weights": rng.normal(
                0.0, np.sqrt(2.0 / (self.hidden + self.num_classes)), (self.num_classes, self.hidden)
            ),
            "output.bias": np.zeros(self.num_classes),
        }
        return ParamVector.from_layers(layers, self.shapes)

    def _forward(self, params: ParamVector, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        layers = params.layers()
        pre_activation = features @ layers["hidden.weights"].T + layers["hidden.bias"]
        hidden = np.maximum(pre_activation, 0.0)
        return pre_activation, hidden @ layers["output.weights"].T + layers["output.bias"]

    def logits(self, params: ParamVector, features: np.ndarray) -> np.ndarray:
        return self._forward(params, features)[1]

    def _backward(self, params: ParamVector, features: np.ndarray, dlogits: np.ndarray) -> np.ndarray:
        n = features.shape[0]
        layers = params.layers()
        pre_activation, _ = self._forward(params, features)
        hidden = np.maximum(pre_activation, 0.0)

        output_weights = (dlogits[:, :, None] * hidden[:, None, :]).reshape(n, -1)
        dhidden = (dlogits @ layers["output.weights"]) * (pre_activation > 0.0)
        hidden_weights = (dhidden[:, :, None] * features[:, None, :]).reshape(n, -1)
        return np.concatenate([hidden_weights, dhidden, output_weights, dlogits], axis=1)


def _softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if not np.all(np.isfinite(logits)):
        raise NonFiniteError("Non-finite logits; training has diverged.")

    log_norm = logsumexp(logits, axis=1)
    losses = log_norm - logits[np.arange(labels.size), labels]
    return losses, np.exp(logits - log_norm[:, None])


def build_model(kind: ModelKind, input_dim: int, num_classes: int, hidden: int = DEFAULT_HIDDEN_WIDTH) -> Model:
    match kind:
        case ModelKind.LOGISTIC:
            return LogisticRegression(input_dim, num_classes)
        case ModelKind.MLP:
            return Mlp(input_dim, num_classes, hidden)

    raise ValueError(f"Unknown model kind {kind}.")


def per_sample_gradients(model: Model, params: ParamVector, batch: Batch) -> tuple[GradientBatch, np.ndarray]:
    if len(batch.labels) == 0:
        raise EmptySliceError("Per-sample gradients need a nonempty batch.")

    return model.per_sample_gradients(params, batch)


def evaluate(model: Model, params: ParamVector, batch: Batch) -> tuple[float, float]:
    """Mean cross-entropy and top-1 accuracy; ties in the argmax go to the lowest class id."""

    features, labels = model.check_batch(params, batch)
    if labels.size == 0:
        raise EmptySliceError("Cannot evaluate on an empty slice.")

    logits = model.logits(params, features)
    losses, _ = _softmax_cross_entropy(logits, labels)
    accuracy = float(np.mean(np.argmax(logits, axis=1) == labels))
    return float(losses.mean()), accuracy
