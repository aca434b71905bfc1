from .models import DEFAULT_HIDDEN_WIDTH, LogisticRegression, Mlp, Model, build_model, evaluate, per_sample_gradients
from .optimizers import OptimizerState, apply_update, init_optimizer
from .params import Batch, ExampleBatch, GradientBatch, LayerShape, ParamVector
