from .core import (
    DenseLayer,
    DenseNet,
    LayerTrace,
    LossKind,
    TrainConfig,
    activate,
    backward,
    forward,
    init_net,
    loss,
    objective,
    train,
)
from .estimators import DenseNetClassifier, DenseNetRegressor, build_net
from .io import load_weights, net_from_dict, net_to_dict, save_weights

__all__ = [
    "DenseLayer",
    "DenseNet",
    "DenseNetClassifier",
    "DenseNetRegressor",
    "LayerTrace",
    "LossKind",
    "TrainConfig",
    "activate",
    "backward",
    "build_net",
    "forward",
    "init_net",
    "load_weights",
    "loss",
    "net_from_dict",
    "net_to_dict",
    "objective",
    "save_weights",
    "train",
]
