"""Adam training loop, evaluation, and the per-epoch history record."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..encode import EncodedDataset
from ..errors import DataError, FitError
from .layers import cross_entropy
from .models import ClassifierModel


class Adam:
    def __init__(self, params: list[np.ndarray], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        correction1 = 1.0 - b1**self.t
        correction2 = 1.0 - b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 128
    seed: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class TrainHistory:
    rows: list[dict] = field(default_factory=list)

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["epoch", "time_s", "train_loss", "train_acc", "val_loss", "val_acc"]
            )
            for r in self.rows:
                writer.writerow([
                    r["epoch"], f"{r['time_s']:.2f}",
                    f"{r['train_loss']:.6f}", f"{r['train_acc']:.6f}",
                    f"{r['val_loss']:.6f}", f"{r['val_acc']:.6f}",
                ])


def _dataset_loss_acc(model: ClassifierModel, dataset: EncodedDataset,
                      batch_size: int = 512) -> tuple[float, float]:
    total_loss = 0.0
    correct = 0
    n = len(dataset)
    for start in range(0, n, batch_size):
        ids = dataset.ids[start : start + batch_size]
        onehot = dataset.onehot[start : start + batch_size].astype(np.float64)
        logits = model.forward(ids)
        loss, _ = cross_entropy(logits, onehot)
        total_loss += loss * len(ids)
        correct += int((np.argmax(logits, axis=1) == np.argmax(onehot, axis=1)).sum())
    return total_loss / n, correct / n


def train(model: ClassifierModel, train_set: EncodedDataset,
          val_set: EncodedDataset | None = None,
          config: TrainConfig | None = None,
          log=None) -> TrainHistory:
    """Mini-batch Adam on categorical cross-entropy.

    Training data is reshuffled every epoch under the run seed; a NaN
    loss aborts with diagnostics rather than training onward from
    garbage.
    """
    config = config or TrainConfig()
    for ds, name in ((train_set, "train"), (val_set, "validation")):
        if ds is not None and ds.pad_len != model.pad_len:
            raise DataError(
                f"{name} set pad_len {ds.pad_len} != model pad_len {model.pad_len}"
            )
    rng = np.random.default_rng(config.seed)
    optimizer = Adam(model.params(), config.learning_rate,
                     config.beta1, config.beta2, config.eps)
    history = TrainHistory()
    n = len(train_set)
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        epoch_loss = 0.0
        epoch_correct = 0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            ids = train_set.ids[batch]
            onehot = train_set.onehot[batch].astype(np.float64)
            logits = model.forward(ids)
            loss, dlogits = cross_entropy(logits, onehot)
            if not np.isfinite(loss):
                raise FitError(
                    f"non-finite loss at epoch {epoch}, batch {start // config.batch_size}"
                )
            epoch_loss += loss * len(batch)
            epoch_correct += int(
                (np.argmax(logits, axis=1) == np.argmax(onehot, axis=1)).sum()
            )
            model.zero_grads()
            model.backward(dlogits)
            optimizer.step(model.grads())
        row = {
            "epoch": epoch,
            "time_s": time.perf_counter() - t0,
            "train_loss": epoch_loss / n,
            "train_acc": epoch_correct / n,
            "val_loss": float("nan"),
            "val_acc": float("nan"),
        }
        if val_set is not None:
            row["val_loss"], row["val_acc"] = _dataset_loss_acc(model, val_set)
        history.rows.append(row)
        if log is not None:
            log(row)
    return history


def evaluate(model: ClassifierModel, test_set: EncodedDataset) -> dict:
    """Loss, accuracy, a per-class table, and the index partition into
    correctly and incorrectly classified tweets."""
    if len(test_set) == 0:
        raise DataError("empty test set")
    if test_set.pad_len != model.pad_len:
        raise DataError("test set pad_len does not match the model")
    loss, accuracy = _dataset_loss_acc(model, test_set)
    predicted = model.predict(test_set.ids)
    actual = test_set.labels.astype(int)
    right = np.nonzero(predicted == actual)[0]
    wrong = np.nonzero(predicted != actual)[0]
    per_class = {}
    for label in (0, 1):
        mask = actual == label
        per_class[label] = {
            "n": int(mask.sum()),
            "correct": int((predicted[mask] == label).sum()),
            "accuracy": float((predicted[mask] == label).mean()) if mask.any() else 0.0,
        }
    return {
        "loss": loss,
        "accuracy": accuracy,
        "per_class": per_class,
        "right_ids": right.tolist(),
        "wrong_ids": wrong.tolist(),
    }


def predict(model: ClassifierModel, ids: np.ndarray) -> np.ndarray:
    return model.predict(np.asarray(ids))
