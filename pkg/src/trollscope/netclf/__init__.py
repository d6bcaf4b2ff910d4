"""Neural tweet classifiers: topologies, training, and evaluation."""

from .layers import (
    Bidirectional,
    Dense,
    Embedding,
    Flatten,
    LSTM,
    cross_entropy,
    softmax,
)
from .models import (
    ClassifierModel,
    TOPOLOGY_BLSTM,
    TOPOLOGY_FEEDFORWARD,
    build_blstm,
    build_feedforward,
)
from .training import Adam, TrainConfig, TrainHistory, evaluate, predict, train

__all__ = [
    "Adam",
    "Bidirectional",
    "ClassifierModel",
    "Dense",
    "Embedding",
    "Flatten",
    "LSTM",
    "TOPOLOGY_BLSTM",
    "TOPOLOGY_FEEDFORWARD",
    "TrainConfig",
    "TrainHistory",
    "build_blstm",
    "build_feedforward",
    "cross_entropy",
    "evaluate",
    "predict",
    "softmax",
    "train",
]
